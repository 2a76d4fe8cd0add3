"""Energies of joint states and hidden-marginalized free energies of visible states.

Sign convention for both topologies::

    E(v, h) = -v.W.h - sum_{i<k} Wvv_ik v_i v_k - b_v.v - b_h.h

The free energy ``F(v) = -T log sum_h exp(-E(v, h)/T)`` has a closed form
because hidden units are conditionally independent given the visibles.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch, TooLargeToEnumerate
from .types import BinaryState, ModelParams

MAX_ENUMERATION_UNITS = 24
_CHUNK = 1 << 16


def softplus(x):
    """``log(1 + exp(x))`` without overflow."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _as_rows(a, width: int, what: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ShapeMismatch(f"{what} has shape {arr.shape}, expected (*, {width})")
    return arr


def visible_energies(p: ModelParams, v) -> np.ndarray:
    """Visible-only part of the energy (lateral and visible-bias terms) for each row."""
    v = _as_rows(v, p.topology.num_visible, "visible rows")
    out = -(v @ p.b_v)
    if p.w_vv is not None:
        # w_vv has zero diagonal, so half the quadratic form is the sum over k < i
        out -= 0.5 * np.einsum("ri,ik,rk->r", v, p.w_vv, v)
    return out


def energies(p: ModelParams, v, h) -> np.ndarray:
    """Vectorized joint energy for rows of visible and hidden states."""
    v = _as_rows(v, p.topology.num_visible, "visible rows")
    h = _as_rows(h, p.topology.num_hidden, "hidden rows")
    if v.shape[0] != h.shape[0]:
        raise ShapeMismatch(f"{v.shape[0]} visible rows vs {h.shape[0]} hidden rows")
    return visible_energies(p, v) - np.einsum("ri,ij,rj->r", v, p.w_vh, h) - h @ p.b_h


def energy(p: ModelParams, s: BinaryState) -> float:
    return float(energies(p, s.visible, s.hidden)[0])


def hidden_activations(p: ModelParams, v) -> np.ndarray:
    """``a_j = sum_i W_ij v_i + b_h_j`` for each visible row."""
    v = _as_rows(v, p.topology.num_visible, "visible rows")
    return v @ p.w_vh + p.b_h


def free_energies(p: ModelParams, v) -> np.ndarray:
    """Free energy of each visible row with hidden units summed out exactly."""
    T = p.temperature
    v = _as_rows(v, p.topology.num_visible, "visible rows")
    marg = softplus(hidden_activations(p, v) / T).sum(axis=1)
    return visible_energies(p, v) - T * marg


def free_energy(p: ModelParams, v) -> float:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ShapeMismatch(f"expected a single visible vector, got shape {v.shape}")
    return float(free_energies(p, v)[0])


def all_states(num_units: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the full state table; row index is the state read MSB first."""
    stop = (1 << num_units) if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(num_units - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def check_enumerable(p: ModelParams, max_units: int = MAX_ENUMERATION_UNITS) -> None:
    n = p.topology.num_units
    if n > max_units:
        raise TooLargeToEnumerate(f"{n} units exceeds the enumeration limit of {max_units}")


def state_energy_chunks(p: ModelParams):
    """Yield ``(states, energies)`` over all joint states in chunks, in table order."""
    size = p.topology.num_units
    n = p.topology.num_visible
    total = 1 << size
    for start in range(0, total, _CHUNK):
        s = all_states(size, start, min(total, start + _CHUNK))
        yield s, energies(p, s[:, :n], s[:, n:])


def log_partition_exact(p: ModelParams, max_units: int = MAX_ENUMERATION_UNITS) -> float:
    """``log Z`` by enumerating every joint state, with a running max-shift."""
    check_enumerable(p, max_units)
    T = p.temperature
    acc_max = -np.inf
    acc_sum = 0.0
    for _, e in state_energy_chunks(p):
        x = -e / T
        m = x.max()
        if m > acc_max:
            acc_sum = acc_sum * np.exp(acc_max - m)
            acc_max = m
        acc_sum += np.exp(x - acc_max).sum()
    return float(acc_max + np.log(acc_sum))
