"""Stochastic KL-gradient training of RBMs and semi-restricted Boltzmann machines.

Each mini-batch contributes one gradient ``<.>_data - <.>_model``: the data
phase averages exact clamped moments over the batch rows, the model phase
comes from a single unclamped sampler call (or exact moments when the sampler
kind is ``exact``). Parameters move along ``+learning_rate * gradient``, which
is descent on KL(P_data || P_model) because the gradient equals
``-T * dKL/dtheta``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import free_energies, log_partition_exact
from .errors import EmptyBatch, EmptyDataset, InvalidConfig, ShapeMismatch
from .samplers import SamplerConfig, SamplerKind, clamped_moments, exact_moments, sample_unclamped
from .types import BmTopology, EncodedDataset, ModelParams

log = logging.getLogger(__name__)

EXACT_KL_MAX_UNITS = 20


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 10
    learning_rate: float = 0.01
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    shuffle_seed: int = 0
    init_scale: float = 0.1
    temperature: float = 1.0
    effective_temperature: float = 1.0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidConfig("learning_rate must be > 0")
        if self.shuffle_seed < 0:
            raise InvalidConfig("shuffle_seed must be non-negative")
        if self.init_scale < 0:
            raise InvalidConfig("init_scale must be non-negative")


@dataclass(frozen=True)
class Gradient:
    """Gradient shaped like :class:`ModelParams`; ``w_vv`` only for semi-restricted models."""

    w_vh: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray
    w_vv: Optional[np.ndarray] = None

    def norms(self) -> dict[str, float]:
        out = {
            "w_vh": float(np.linalg.norm(self.w_vh)),
            "b_v": float(np.linalg.norm(self.b_v)),
            "b_h": float(np.linalg.norm(self.b_h)),
        }
        # each lateral coupling appears twice in the symmetric matrix
        out["w_vv"] = float(np.linalg.norm(np.triu(self.w_vv, 1))) if self.w_vv is not None else 0.0
        return out


@dataclass
class EpochRecord:
    epoch: int
    mean_free_energy: float
    grad_norms: dict[str, float]
    exact_kl: Optional[float]
    wall_time: float


@dataclass
class TrainReport:
    params: ModelParams
    epochs: list[EpochRecord] = field(default_factory=list)


def kl_gradient(p: ModelParams, batch, sampler: SamplerConfig, stream=()) -> Gradient:
    """``<s_i s_j>_data - <s_i s_j>_model`` on every edge and ``<s_i>_data - <s_i>_model`` per unit."""
    rows = np.asarray(batch)
    if rows.size == 0:
        raise EmptyBatch("batch is empty")
    if rows.ndim != 2 or rows.shape[1] != p.topology.num_visible:
        raise ShapeMismatch(f"batch has shape {rows.shape}, expected (*, {p.topology.num_visible})")

    data = clamped_moments(p, rows)
    if sampler.kind is SamplerKind.EXACT:
        model = exact_moments(p)
    else:
        model = sample_unclamped(p, sampler, stream)

    n = p.topology.num_visible
    du = data.mean_units - model.mean_units
    dp = data.mean_pairs - model.mean_pairs
    w_vv = None
    if p.topology.semi_restricted:
        w_vv = dp[:n, :n].copy()
        np.fill_diagonal(w_vv, 0.0)
    return Gradient(w_vh=dp[:n, n:].copy(), b_v=du[:n].copy(), b_h=du[n:].copy(), w_vv=w_vv)


def apply_update(p: ModelParams, g: Gradient, learning_rate: float) -> ModelParams:
    """``theta + learning_rate * g``; the lateral matrix is re-symmetrised with a zero diagonal."""
    if g.w_vh.shape != p.w_vh.shape or g.b_v.shape != p.b_v.shape or g.b_h.shape != p.b_h.shape:
        raise ShapeMismatch("gradient does not match parameter shapes")
    if (g.w_vv is None) != (p.w_vv is None) or (g.w_vv is not None and g.w_vv.shape != p.w_vv.shape):
        raise ShapeMismatch("gradient lateral block does not match the topology")
    w_vv = None
    if p.w_vv is not None:
        w_vv = p.w_vv + learning_rate * g.w_vv
        w_vv = 0.5 * (w_vv + w_vv.T)
        np.fill_diagonal(w_vv, 0.0)
    return p.replace(
        w_vh=p.w_vh + learning_rate * g.w_vh,
        b_v=p.b_v + learning_rate * g.b_v,
        b_h=p.b_h + learning_rate * g.b_h,
        w_vv=w_vv,
    )


def exact_kl(p: ModelParams, rows) -> float:
    """KL(P_data || P_model) over visible states, P_data the empirical row distribution."""
    rows = np.asarray(rows)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    pd = counts / counts.sum()
    log_pm = -free_energies(p, uniq) / p.temperature - log_partition_exact(p)
    return float(np.sum(pd * (np.log(pd) - log_pm)))


def init_params(topology: BmTopology, cfg: TrainConfig) -> ModelParams:
    """Weights uniform in ``[-init_scale, init_scale]``, biases zero."""
    rng = np.random.default_rng([cfg.shuffle_seed, 0])
    n, m = topology.num_visible, topology.num_hidden
    s = cfg.init_scale
    w_vh = rng.uniform(-s, s, size=(n, m))
    w_vv = None
    if topology.semi_restricted:
        upper = np.triu(rng.uniform(-s, s, size=(n, n)), 1)
        w_vv = upper + upper.T
    return ModelParams(
        topology=topology,
        w_vh=w_vh,
        b_v=np.zeros(n),
        b_h=np.zeros(m),
        w_vv=w_vv,
        temperature=cfg.temperature,
        effective_temperature=cfg.effective_temperature,
    )


def train(
    data: EncodedDataset,
    topology: BmTopology,
    cfg: TrainConfig,
    init: Optional[ModelParams] = None,
) -> TrainReport:
    """Run ``cfg.epochs`` passes of shuffled mini-batch updates and record per-epoch diagnostics."""
    rows = data.rows if isinstance(data, EncodedDataset) else np.asarray(data, dtype=np.uint8)
    if rows.shape[0] == 0:
        raise EmptyDataset("no training rows")
    if rows.shape[1] != topology.num_visible:
        raise ShapeMismatch(f"rows have width {rows.shape[1]}, topology expects {topology.num_visible}")

    p = init if init is not None else init_params(topology, cfg)
    if p.topology != topology:
        raise ShapeMismatch("initial parameters do not match the topology")
    shuffle = np.random.default_rng([cfg.shuffle_seed, 1])
    track_kl = topology.num_units <= EXACT_KL_MAX_UNITS
    report = TrainReport(params=p)
    step = 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = shuffle.permutation(rows.shape[0])
        norms = []
        for start in range(0, rows.shape[0], cfg.batch_size):
            batch = rows[order[start : start + cfg.batch_size]]
            g = kl_gradient(p, batch, cfg.sampler, stream=(step,))
            p = apply_update(p, g, cfg.learning_rate)
            norms.append(g.norms())
            step += 1
        mean_norms = {k: float(np.mean([d[k] for d in norms])) for k in norms[0]}
        record = EpochRecord(
            epoch=epoch + 1,
            mean_free_energy=float(free_energies(p, rows).mean()),
            grad_norms=mean_norms,
            exact_kl=exact_kl(p, rows) if track_kl else None,
            wall_time=time.perf_counter() - t0,
        )
        report.epochs.append(record)
        log.debug("epoch %d: mean F %.4f", record.epoch, record.mean_free_energy)
    report.params = p
    return report
