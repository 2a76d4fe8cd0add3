"""Boltzmann samplers for the unclamped phase and analytic moments for the clamped phase.

Three unclamped backends share one entry point, :func:`sample_unclamped`:

* ``exact`` draws i.i.d. reads from the enumerated distribution (small models only),
* ``gibbs`` runs one heat-bath chain and keeps every ``gibbs_thin``-th sweep
  after ``gibbs_burn_in`` sweeps,
* ``sa`` anneals each read independently with single-bit-flip Metropolis over a
  geometric inverse-temperature schedule and returns the final states, the way
  an annealer returns one state per anneal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .energy import (
    MAX_ENUMERATION_UNITS,
    all_states,
    check_enumerable,
    hidden_activations,
    log_partition_exact,
    state_energy_chunks,
)
from .errors import InvalidConfig, ShapeMismatch
from .types import ModelParams, SampleBatch

# upper bound on uniforms materialised per kernel call
_UNIFORM_BUDGET = 1 << 22


class SamplerKind(str, enum.Enum):
    EXACT = "exact"
    GIBBS = "gibbs"
    SA = "sa"


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for :func:`sample_unclamped`.

    ``sa_beta_end=None`` means ``1 / temperature`` of the model being sampled.
    """

    kind: SamplerKind = SamplerKind.SA
    num_reads: int = 100
    gibbs_burn_in: int = 100
    gibbs_thin: int = 1
    sa_sweeps: int = 100
    sa_beta_start: float = 0.1
    sa_beta_end: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", SamplerKind(self.kind))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        if self.num_reads < 1:
            raise InvalidConfig("num_reads must be >= 1")
        if self.gibbs_burn_in < 0:
            raise InvalidConfig("gibbs_burn_in must be >= 0")
        if self.gibbs_thin < 1:
            raise InvalidConfig("gibbs_thin must be >= 1")
        if self.sa_sweeps < 1:
            raise InvalidConfig("sa_sweeps must be >= 1")
        if not self.sa_beta_start > 0:
            raise InvalidConfig("sa_beta_start must be > 0")
        if self.sa_beta_end is not None:
            if not self.sa_beta_end > 0:
                raise InvalidConfig("sa_beta_end must be > 0")
            if self.sa_beta_start > self.sa_beta_end:
                raise InvalidConfig("sa_beta_start must not exceed sa_beta_end")
        if self.rng_seed < 0:
            raise InvalidConfig("rng_seed must be non-negative")

    def replace(self, **changes) -> "SamplerConfig":
        return replace(self, **changes)


def beta_schedule(beta_start: float, beta_end: float, sweeps: int) -> np.ndarray:
    """Geometric interpolation from ``beta_start`` to ``beta_end`` inclusive."""
    if sweeps == 1:
        return np.array([beta_end], dtype=np.float64)
    t = np.arange(sweeps) / (sweeps - 1)
    betas = beta_start * (beta_end / beta_start) ** t
    betas[-1] = beta_end
    return betas


def _rng(cfg: SamplerConfig, stream: Sequence[int]) -> np.random.Generator:
    return np.random.default_rng([cfg.rng_seed, *stream])


def exact_distribution(p: ModelParams, max_units: int = MAX_ENUMERATION_UNITS) -> np.ndarray:
    """Probability of every joint state, indexed like :func:`energy.all_states`."""
    log_z = log_partition_exact(p, max_units)
    T = p.temperature
    return np.concatenate([np.exp(-e / T - log_z) for _, e in state_energy_chunks(p)])


def exact_moments(p: ModelParams, max_units: int = MAX_ENUMERATION_UNITS) -> SampleBatch:
    """Exact ``<s_i>`` and ``<s_i s_j>`` under the model; ``states`` is empty."""
    check_enumerable(p, max_units)
    log_z = log_partition_exact(p, max_units)
    T = p.temperature
    size = p.topology.num_units
    units = np.zeros(size)
    pairs = np.zeros((size, size))
    for s, e in state_energy_chunks(p):
        w = np.exp(-e / T - log_z)
        sf = s.astype(np.float64)
        units += w @ sf
        pairs += (sf * w[:, None]).T @ sf
    return SampleBatch(p.topology.num_visible, np.zeros((0, size), np.uint8), units, pairs)


def _sa_reads(p: ModelParams, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    beta_end = cfg.sa_beta_end if cfg.sa_beta_end is not None else 1.0 / p.temperature
    if cfg.sa_beta_start > beta_end:
        raise InvalidConfig(
            f"sa_beta_start {cfg.sa_beta_start} exceeds the resolved sa_beta_end {beta_end}"
        )
    betas = beta_schedule(cfg.sa_beta_start, beta_end, cfg.sa_sweeps)
    scale = 1.0 / p.effective_temperature
    w_vh = np.ascontiguousarray(p.w_vh * scale)
    w_vv = np.ascontiguousarray(p.lateral * scale)
    b_v = p.b_v * scale
    b_h = p.b_h * scale

    size = p.topology.num_units
    states = rng.integers(0, 2, size=(cfg.num_reads, size), dtype=np.uint8)
    per_chunk = max(1, _UNIFORM_BUDGET // (cfg.sa_sweeps * max(size, 1)))
    for start in range(0, cfg.num_reads, per_chunk):
        chunk = states[start : start + per_chunk]
        u = rng.random((chunk.shape[0], cfg.sa_sweeps, size))
        _kernels.anneal(chunk, w_vh, w_vv, b_v, b_h, betas, u)
    return states


def _gibbs_reads(p: ModelParams, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    size = p.topology.num_units
    w_vh = np.ascontiguousarray(p.w_vh)
    w_vv = np.ascontiguousarray(p.lateral)
    state = rng.integers(0, 2, size=size, dtype=np.uint8)
    total = cfg.gibbs_burn_in + cfg.num_reads * cfg.gibbs_thin
    per_chunk = max(1, _UNIFORM_BUDGET // max(size, 1))
    kept = []
    done = 0
    while done < total:
        k = min(per_chunk, total - done)
        u = rng.random((k, size))
        trace = np.empty((k, size), dtype=np.uint8)
        _kernels.gibbs_sweeps(state, w_vh, w_vv, p.b_v, p.b_h, p.temperature, u, trace)
        # sweep numbers (1-based) done+1 .. done+k; keep burn_in + thin*r for r >= 1
        sweep_no = np.arange(done + 1, done + k + 1)
        keep = (sweep_no > cfg.gibbs_burn_in) & ((sweep_no - cfg.gibbs_burn_in) % cfg.gibbs_thin == 0)
        kept.append(trace[keep])
        done += k
    return np.concatenate(kept)


def _exact_reads(p: ModelParams, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    probs = exact_distribution(p)
    idx = rng.choice(probs.shape[0], size=cfg.num_reads, p=probs / probs.sum())
    return all_states(p.topology.num_units)[idx]


_BACKENDS = {
    SamplerKind.EXACT: _exact_reads,
    SamplerKind.GIBBS: _gibbs_reads,
    SamplerKind.SA: _sa_reads,
}


def sample_unclamped(p: ModelParams, cfg: SamplerConfig, stream: Sequence[int] = ()) -> SampleBatch:
    """Draw ``cfg.num_reads`` joint states approximately from the model's Boltzmann distribution.

    ``stream`` extends ``cfg.rng_seed`` so callers such as the training loop can
    take an independent, reproducible stream per step.
    """
    if not isinstance(cfg, SamplerConfig):
        raise InvalidConfig("cfg must be a SamplerConfig")
    states = _BACKENDS[cfg.kind](p, cfg, _rng(cfg, stream))
    return SampleBatch.from_states(states, p.topology.num_visible)


def hidden_probabilities(p: ModelParams, v) -> np.ndarray:
    """``p(h_j = 1 | v)`` for each visible row."""
    a = hidden_activations(p, v) / p.temperature
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def clamped_moments(p: ModelParams, rows) -> SampleBatch:
    """Data-phase moments averaged over clamped visible rows, computed analytically."""
    v = np.asarray(rows, dtype=np.float64)
    if v.ndim == 1:
        v = v.reshape(1, -1)
    if v.ndim != 2 or v.shape[1] != p.topology.num_visible:
        raise ShapeMismatch(f"rows have shape {v.shape}, expected (*, {p.topology.num_visible})")
    u = np.hstack([v, hidden_probabilities(p, v)])
    b = u.shape[0]
    units = u.mean(axis=0)
    pairs = (u.T @ u) / b
    # hidden units are independent given v: <h_j h_j> = p_j, not p_j**2
    np.fill_diagonal(pairs, units)
    size = p.topology.num_units
    return SampleBatch(p.topology.num_visible, np.zeros((0, size), np.uint8), units, pairs)


def sample_clamped(p: ModelParams, v, cfg: Optional[SamplerConfig] = None) -> SampleBatch:
    """Clamp the visibles to ``v`` and return exact hidden moments.

    The conditional factorises over hidden units, so no sampling is performed
    and ``cfg`` is accepted only for interface symmetry.
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != p.topology.num_visible:
        raise ShapeMismatch(f"v has shape {v.shape}, expected ({p.topology.num_visible},)")
    return clamped_moments(p, v)
