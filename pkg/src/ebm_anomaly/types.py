"""Shared data model: topologies, parameters, states, datasets and sample batches.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be passed between threads and processes without copying defensively.
Units are {0, 1} valued everywhere in the public API.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AsymmetricLateral,
    CoordinateOutOfRange,
    LengthMismatch,
    NonfiniteEntry,
    NonpositiveTemperature,
    NonzeroLateralDiagonal,
    ShapeMismatch,
)


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Laterals(str, enum.Enum):
    NONE = "none"
    VISIBLE_VISIBLE = "visible_visible"


@dataclass(frozen=True)
class BmTopology:
    """Layer sizes and which couplings exist.

    ``Laterals.NONE`` is the bipartite RBM. ``Laterals.VISIBLE_VISIBLE`` is the
    semi-restricted machine: every visible pair is coupled as well. Hidden
    units are never coupled to each other.
    """

    num_visible: int
    num_hidden: int
    laterals: Laterals = Laterals.NONE

    def __post_init__(self):
        if self.num_visible < 1:
            raise ShapeMismatch(f"num_visible must be >= 1, got {self.num_visible}")
        if self.num_hidden < 0:
            raise ShapeMismatch(f"num_hidden must be >= 0, got {self.num_hidden}")
        object.__setattr__(self, "laterals", Laterals(self.laterals))

    @property
    def num_units(self) -> int:
        return self.num_visible + self.num_hidden

    @property
    def semi_restricted(self) -> bool:
        return self.laterals is Laterals.VISIBLE_VISIBLE

    def edges(self) -> list[tuple[int, int]]:
        """All coupled unit pairs ``(i, j)`` with ``i < j`` in joint indexing (visibles first)."""
        n, m = self.num_visible, self.num_hidden
        out = []
        if self.semi_restricted:
            out.extend((i, k) for i in range(n) for k in range(i + 1, n))
        out.extend((i, n + j) for i in range(n) for j in range(m))
        return out

    def edge_mask(self) -> np.ndarray:
        """Boolean ``(N+M, N+M)`` symmetric adjacency matrix."""
        size = self.num_units
        mask = np.zeros((size, size), dtype=bool)
        n = self.num_visible
        mask[:n, n:] = True
        mask[n:, :n] = True
        if self.semi_restricted:
            mask[:n, :n] = True
            np.fill_diagonal(mask, False)
        return mask


@dataclass(frozen=True)
class ModelParams:
    """Weights, biases and temperatures of a Boltzmann machine.

    ``w_vv`` is ``None`` for an RBM and a full symmetric zero-diagonal matrix
    for the semi-restricted topology. Construction validates every invariant.
    """

    topology: BmTopology
    w_vh: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray
    w_vv: Optional[np.ndarray] = None
    temperature: float = 1.0
    effective_temperature: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "w_vh", _frozen(self.w_vh, np.float64))
        object.__setattr__(self, "b_v", _frozen(self.b_v, np.float64))
        object.__setattr__(self, "b_h", _frozen(self.b_h, np.float64))
        if self.w_vv is not None:
            object.__setattr__(self, "w_vv", _frozen(self.w_vv, np.float64))
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "effective_temperature", float(self.effective_temperature))
        validate_params(self)

    @classmethod
    def zeros(cls, topology: BmTopology, temperature=1.0, effective_temperature=1.0) -> "ModelParams":
        n, m = topology.num_visible, topology.num_hidden
        return cls(
            topology=topology,
            w_vh=np.zeros((n, m)),
            b_v=np.zeros(n),
            b_h=np.zeros(m),
            w_vv=np.zeros((n, n)) if topology.semi_restricted else None,
            temperature=temperature,
            effective_temperature=effective_temperature,
        )

    @property
    def lateral(self) -> np.ndarray:
        """``w_vv`` or an all-zero matrix for the RBM."""
        if self.w_vv is None:
            n = self.topology.num_visible
            return np.zeros((n, n))
        return self.w_vv

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric ``(N+M, N+M)`` coupling matrix in joint indexing, zero diagonal."""
        n = self.topology.num_visible
        size = self.topology.num_units
        J = np.zeros((size, size))
        J[:n, :n] = self.lateral
        J[:n, n:] = self.w_vh
        J[n:, :n] = self.w_vh.T
        return J

    def biases(self) -> np.ndarray:
        return np.concatenate([self.b_v, self.b_h])

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def validate_params(p: ModelParams) -> None:
    """Raise the exception for the first violated ``ModelParams`` invariant.

    Checked in order: shapes, finiteness, lateral symmetry, lateral diagonal,
    temperatures.
    """
    n, m = p.topology.num_visible, p.topology.num_hidden
    if p.w_vh.shape != (n, m):
        raise ShapeMismatch(f"w_vh has shape {p.w_vh.shape}, expected {(n, m)}")
    if p.b_v.shape != (n,):
        raise ShapeMismatch(f"b_v has shape {p.b_v.shape}, expected {(n,)}")
    if p.b_h.shape != (m,):
        raise ShapeMismatch(f"b_h has shape {p.b_h.shape}, expected {(m,)}")
    if p.topology.semi_restricted:
        if p.w_vv is None or p.w_vv.shape != (n, n):
            got = None if p.w_vv is None else p.w_vv.shape
            raise ShapeMismatch(f"w_vv has shape {got}, expected {(n, n)}")
    elif p.w_vv is not None:
        raise ShapeMismatch("w_vv must be absent for an RBM topology")

    arrays = [p.w_vh, p.b_v, p.b_h] + ([p.w_vv] if p.w_vv is not None else [])
    scalars = [p.temperature, p.effective_temperature]
    if not all(np.all(np.isfinite(a)) for a in arrays) or not np.all(np.isfinite(scalars)):
        raise NonfiniteEntry("parameters contain NaN or infinite entries")

    if p.w_vv is not None:
        if not np.array_equal(p.w_vv, p.w_vv.T):
            raise AsymmetricLateral("w_vv is not symmetric")
        if np.any(np.diag(p.w_vv) != 0.0):
            raise NonzeroLateralDiagonal("w_vv has a nonzero diagonal")

    if p.temperature <= 0:
        raise NonpositiveTemperature(f"temperature must be > 0, got {p.temperature}")
    if p.effective_temperature <= 0:
        raise NonpositiveTemperature(
            f"effective_temperature must be > 0, got {p.effective_temperature}"
        )


def _bits(a, name: str) -> np.ndarray:
    arr = np.asarray(a)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} entries must be 0 or 1")
    return _frozen(arr, np.uint8)


@dataclass(frozen=True)
class BinaryState:
    visible: np.ndarray
    hidden: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))

    def __post_init__(self):
        object.__setattr__(self, "visible", _bits(self.visible, "visible").reshape(-1))
        object.__setattr__(self, "hidden", _bits(self.hidden, "hidden").reshape(-1))

    def joint(self) -> np.ndarray:
        return np.concatenate([self.visible, self.hidden])


def encode_point(point: Sequence[int], bits_per_dim: int) -> np.ndarray:
    """Fixed-width base-2 encoding of every coordinate, MSB first, concatenated."""
    coords = np.asarray(point, dtype=np.int64).reshape(-1)
    hi = (1 << bits_per_dim) - 1
    if np.any(coords < 0) or np.any(coords > hi):
        raise CoordinateOutOfRange(f"coordinates {coords.tolist()} outside [0, {hi}]")
    shifts = np.arange(bits_per_dim - 1, -1, -1)
    return ((coords[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def decode_point(row: Sequence[int], dim: int, bits_per_dim: int) -> np.ndarray:
    bits = np.asarray(row, dtype=np.int64).reshape(-1)
    if bits.size != dim * bits_per_dim:
        raise LengthMismatch(f"row has {bits.size} bits, expected {dim} x {bits_per_dim}")
    weights = 1 << np.arange(bits_per_dim - 1, -1, -1)
    return bits.reshape(dim, bits_per_dim) @ weights


@dataclass(frozen=True)
class Dataset:
    """Integer points on the grid ``[0, 2**bits_per_dim - 1]**dim``.

    ``labels`` (True = anomaly) are carried for evaluation only and never read
    by training or threshold fitting.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    bits_per_dim: int = 7

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 2:
            raise ShapeMismatch(f"points must be 2-D, got shape {pts.shape}")
        hi = (1 << self.bits_per_dim) - 1
        if pts.size and (pts.min() < 0 or pts.max() > hi):
            raise CoordinateOutOfRange(f"coordinates outside [0, {hi}]")
        object.__setattr__(self, "points", _frozen(pts, np.int64))
        if self.labels is not None:
            labels = _frozen(self.labels, bool).reshape(-1)
            if labels.shape[0] != pts.shape[0]:
                raise LengthMismatch(f"{labels.shape[0]} labels for {pts.shape[0]} points")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, index) -> "Dataset":
        labels = None if self.labels is None else self.labels[index]
        return Dataset(self.points[index], labels, self.bits_per_dim)

    def encode(self) -> "EncodedDataset":
        n = len(self)
        if n == 0:
            rows = np.zeros((0, self.dim * self.bits_per_dim), dtype=np.uint8)
        else:
            shifts = np.arange(self.bits_per_dim - 1, -1, -1)
            rows = ((self.points[:, :, None] >> shifts) & 1).reshape(n, -1).astype(np.uint8)
        return EncodedDataset(rows, self.labels, self.dim, self.bits_per_dim)


@dataclass(frozen=True)
class EncodedDataset:
    rows: np.ndarray
    labels: Optional[np.ndarray] = None
    dim: int = 3
    bits_per_dim: int = 7

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.uint8)
        if rows.ndim == 1:
            rows = rows.reshape(-1, self.dim * self.bits_per_dim)
        if rows.shape[1] != self.dim * self.bits_per_dim:
            raise ShapeMismatch(
                f"rows have width {rows.shape[1]}, expected {self.dim * self.bits_per_dim}"
            )
        object.__setattr__(self, "rows", _bits(rows, "rows"))
        if self.labels is not None:
            labels = _frozen(self.labels, bool).reshape(-1)
            if labels.shape[0] != rows.shape[0]:
                raise LengthMismatch(f"{labels.shape[0]} labels for {rows.shape[0]} rows")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def decode(self) -> Dataset:
        weights = 1 << np.arange(self.bits_per_dim - 1, -1, -1)
        pts = self.rows.astype(np.int64).reshape(len(self), self.dim, self.bits_per_dim) @ weights
        return Dataset(pts, self.labels, self.bits_per_dim)


@dataclass(frozen=True)
class SampleBatch:
    """Sampled joint states plus first and second moments.

    ``mean_pairs`` is the full ``(N+M, N+M)`` matrix of ``<s_i s_j>``; only
    entries on topology edges are used by training. Its diagonal equals
    ``mean_units``. ``states`` may be empty when the moments are analytic.
    """

    num_visible: int
    states: np.ndarray
    mean_units: np.ndarray
    mean_pairs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen(self.states, np.uint8))
        object.__setattr__(self, "mean_units", _frozen(self.mean_units, np.float64))
        object.__setattr__(self, "mean_pairs", _frozen(self.mean_pairs, np.float64))

    @classmethod
    def from_states(cls, states: np.ndarray, num_visible: int) -> "SampleBatch":
        s = np.asarray(states, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] == 0:
            raise ShapeMismatch("need a non-empty 2-D array of states")
        mean_units = s.mean(axis=0)
        mean_pairs = (s.T @ s) / s.shape[0]
        return cls(num_visible, states, mean_units, mean_pairs)

    @property
    def num_reads(self) -> int:
        return self.states.shape[0]

    @property
    def visible_means(self) -> np.ndarray:
        return self.mean_units[: self.num_visible]

    @property
    def hidden_means(self) -> np.ndarray:
        return self.mean_units[self.num_visible :]

    def as_states(self) -> list[BinaryState]:
        n = self.num_visible
        return [BinaryState(s[:n], s[n:]) for s in self.states]
