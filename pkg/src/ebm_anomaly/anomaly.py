"""Unsupervised anomaly classification by a free-energy percentile threshold.

The threshold is the nearest-rank percentile of training free energies, so it
is always an observed energy. A row is anomalous iff its free energy is
strictly greater than the threshold; ties count as normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import free_energies
from .errors import EmptyDataset, PercentileOutOfRange, ShapeMismatch
from .types import EncodedDataset, ModelParams

DEFAULT_PERCENTILE = 95.0


@dataclass(frozen=True)
class Threshold:
    value: float
    percentile: float
    source_count: int


@dataclass(frozen=True)
class AnomalyVerdict:
    free_energy: float
    is_anomaly: bool


def nearest_rank(values, percentile: float) -> float:
    """The ``ceil(percentile/100 * n)``-th smallest value (1-based)."""
    x = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if x.size == 0:
        raise EmptyDataset("cannot take a percentile of nothing")
    if not 0 < percentile < 100:
        raise PercentileOutOfRange(f"percentile must lie in (0, 100), got {percentile}")
    k = math.ceil(percentile / 100.0 * x.size)
    return float(x[max(k, 1) - 1])


def threshold_from_energies(energies, percentile: float = DEFAULT_PERCENTILE) -> Threshold:
    e = np.asarray(energies, dtype=np.float64).reshape(-1)
    return Threshold(nearest_rank(e, percentile), float(percentile), int(e.size))


def _rows(rows) -> np.ndarray:
    return rows.rows if isinstance(rows, EncodedDataset) else np.asarray(rows)


def fit_threshold(p: ModelParams, train: EncodedDataset, percentile: float = DEFAULT_PERCENTILE) -> Threshold:
    rows = _rows(train)
    if rows.shape[0] == 0:
        raise EmptyDataset("no training rows")
    if not 0 < percentile < 100:
        raise PercentileOutOfRange(f"percentile must lie in (0, 100), got {percentile}")
    return threshold_from_energies(free_energies(p, rows), percentile)


def verdicts_from_energies(energies, t: Threshold) -> list[AnomalyVerdict]:
    return [AnomalyVerdict(float(e), bool(e > t.value)) for e in np.asarray(energies, dtype=np.float64)]


def classify(p: ModelParams, t: Threshold, rows) -> list[AnomalyVerdict]:
    r = _rows(rows)
    if r.size == 0:
        return []
    if r.ndim != 2 or r.shape[1] != p.topology.num_visible:
        raise ShapeMismatch(f"rows have shape {r.shape}, expected (*, {p.topology.num_visible})")
    return verdicts_from_energies(free_energies(p, r), t)
