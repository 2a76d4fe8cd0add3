"""Synthetic clustered integer datasets with scarce, isolated anomalies, and stratified splits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, InvalidConfig, PlacementInfeasible
from .types import Dataset


@dataclass(frozen=True)
class GenConfig:
    """Defaults give 5 x 200 cluster points plus 7 anomalies in ``[0, 127]**3``."""

    dim: int = 3
    bits_per_dim: int = 7
    num_clusters: int = 5
    points_per_cluster: int = 200
    num_anomalies: int = 7
    cluster_std: float = 6.0
    min_anomaly_separation: float = 30.0
    seed: int = 0
    max_attempts: int = 100_000

    def __post_init__(self):
        for name in ("dim", "bits_per_dim", "num_clusters", "points_per_cluster", "max_attempts"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if self.num_anomalies < 0:
            raise InvalidConfig("num_anomalies must be >= 0")
        if not self.cluster_std > 0:
            raise InvalidConfig("cluster_std must be > 0")
        if not self.min_anomaly_separation > 0:
            raise InvalidConfig("min_anomaly_separation must be > 0")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")

    @property
    def grid_max(self) -> int:
        return (1 << self.bits_per_dim) - 1

    @property
    def total(self) -> int:
        return self.num_clusters * self.points_per_cluster + self.num_anomalies


@dataclass(frozen=True)
class Generated:
    dataset: Dataset
    centers: np.ndarray


def _place_centers(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    min_sep = 4.0 * cfg.cluster_std
    centers = []
    attempts = 0
    while len(centers) < cfg.num_clusters:
        if attempts >= cfg.max_attempts:
            raise PlacementInfeasible(
                f"placed {len(centers)} of {cfg.num_clusters} centers in {attempts} attempts"
            )
        attempts += 1
        c = rng.integers(0, cfg.grid_max + 1, size=cfg.dim)
        if all(np.linalg.norm(c - o) >= min_sep for o in centers):
            centers.append(c)
    return np.array(centers, dtype=np.int64)


def _place_anomalies(cfg: GenConfig, centers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = []
    attempts = 0
    while len(out) < cfg.num_anomalies:
        if attempts >= cfg.max_attempts:
            raise PlacementInfeasible(
                f"placed {len(out)} of {cfg.num_anomalies} anomalies in {attempts} attempts"
            )
        attempts += 1
        a = rng.integers(0, cfg.grid_max + 1, size=cfg.dim)
        if np.min(np.linalg.norm(centers - a, axis=1)) >= cfg.min_anomaly_separation:
            out.append(a)
    return np.array(out, dtype=np.int64).reshape(-1, cfg.dim)


def generate_with_centers(cfg: GenConfig) -> Generated:
    rng = np.random.default_rng(cfg.seed)
    centers = _place_centers(cfg, rng)
    blobs = [
        np.clip(np.rint(rng.normal(c, cfg.cluster_std, size=(cfg.points_per_cluster, cfg.dim))), 0, cfg.grid_max)
        for c in centers
    ]
    anomalies = _place_anomalies(cfg, centers, rng)
    points = np.vstack(blobs + [anomalies]).astype(np.int64)
    labels = np.zeros(points.shape[0], dtype=bool)
    labels[points.shape[0] - anomalies.shape[0] :] = True
    order = rng.permutation(points.shape[0])
    return Generated(Dataset(points[order], labels[order], cfg.bits_per_dim), centers)


def generate(cfg: GenConfig) -> Dataset:
    """Labelled dataset of ``num_clusters * points_per_cluster + num_anomalies`` rows, shuffled."""
    return generate_with_centers(cfg).dataset


def split(data: Dataset, ratio: float = 0.5, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified random split into ``ceil(ratio * n)`` and ``n - ceil(ratio * n)`` rows.

    The first partition takes ``ceil(ratio * anomalies)`` anomalies when it has
    room. Rows keep their original relative order inside each partition.
    """
    n = len(data)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0 < ratio < 1:
        raise InvalidConfig(f"ratio must lie in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    n_first = math.ceil(ratio * n)
    labels = data.labels if data.labels is not None else np.zeros(n, dtype=bool)
    pos = np.flatnonzero(labels)
    neg = np.flatnonzero(~labels)
    k_pos = min(math.ceil(ratio * pos.size), n_first)
    k_pos = max(k_pos, n_first - neg.size)
    first = np.concatenate([
        rng.choice(pos, size=k_pos, replace=False),
        rng.choice(neg, size=n_first - k_pos, replace=False),
    ])
    mask = np.zeros(n, dtype=bool)
    mask[first] = True
    return data.subset(np.flatnonzero(mask)), data.subset(np.flatnonzero(~mask))
