"""Detection metrics and the greedy hyperparameter sweep (hidden units, then epochs, then batch size)."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .anomaly import DEFAULT_PERCENTILE, AnomalyVerdict, Threshold, classify, fit_threshold
from .datagen import split
from .errors import InvalidPlan, LengthMismatch
from .samplers import SamplerConfig
from .training import TrainConfig, TrainReport, train
from .types import BmTopology, Dataset, Laterals

STAGES = ("hidden_units", "epochs", "batch_size")


@dataclass(frozen=True)
class Metrics:
    true_positives: int
    false_positives: int
    true_negatives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, tn, fn, precision, recall, f1)

    def as_dict(self) -> dict:
        return asdict(self)


def score(verdicts: Sequence[AnomalyVerdict], labels: Sequence[bool]) -> Metrics:
    """Confusion counts with anomalies as the positive class."""
    if len(verdicts) != len(labels):
        raise LengthMismatch(f"{len(verdicts)} verdicts vs {len(labels)} labels")
    pred = np.array([v.is_anomaly for v in verdicts], dtype=bool)
    truth = np.asarray(labels, dtype=bool).reshape(-1)
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    tn = int(np.sum(~pred & ~truth))
    fn = int(np.sum(~pred & truth))
    return Metrics.from_counts(tp, fp, tn, fn)


@dataclass(frozen=True)
class RunResult:
    metrics: Metrics
    threshold: Threshold
    report: TrainReport


def run_experiment(
    train_set: Dataset,
    test_set: Dataset,
    topology: BmTopology,
    cfg: TrainConfig,
    percentile: float = DEFAULT_PERCENTILE,
) -> RunResult:
    """Train on unlabeled ``train_set``, fit the threshold there, score on labeled ``test_set``."""
    enc_train = train_set.encode()
    report = train(enc_train, topology, cfg)
    thr = fit_threshold(report.params, enc_train, percentile)
    verdicts = classify(report.params, thr, test_set.encode())
    return RunResult(score(verdicts, test_set.labels), thr, report)


@dataclass(frozen=True)
class SweepPlan:
    """Greedy plan: each stage tries its candidates with earlier winners fixed.

    ``candidates`` maps stage name to candidate values; stages are always
    visited in :data:`STAGES` order and a missing stage keeps the baseline value.
    """

    laterals: Laterals
    candidates: dict
    hidden_units: int = 16
    baseline: TrainConfig = field(default_factory=TrainConfig)
    repetitions: int = 3
    seed: int = 0
    split_ratio: float = 0.5
    split_seed: int = 0
    percentile: float = DEFAULT_PERCENTILE

    def __post_init__(self):
        object.__setattr__(self, "laterals", Laterals(self.laterals))
        unknown = set(self.candidates) - set(STAGES)
        if unknown:
            raise InvalidPlan(f"unknown stages {sorted(unknown)}")
        for stage, values in self.candidates.items():
            if len(values) == 0:
                raise InvalidPlan(f"stage {stage!r} has no candidates")
            lo = 0 if stage == "hidden_units" else 1
            if len(set(values)) != len(values):
                raise InvalidPlan(f"stage {stage!r} has duplicate candidates")
            if any(int(v) != v or v < lo for v in values):
                raise InvalidPlan(f"stage {stage!r} candidates must be integers >= {lo}")
        if self.repetitions < 1:
            raise InvalidPlan("repetitions must be >= 1")
        if self.seed < 0:
            raise InvalidPlan("seed must be non-negative")


@dataclass(frozen=True)
class SweepRow:
    stage: str
    candidate: int
    repetition: int
    hidden_units: int
    epochs: int
    batch_size: int
    f1: float
    precision: float
    recall: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    winners: dict[str, int]
    mean_f1: dict[str, dict[int, float]]

    def chosen(self) -> dict[str, int]:
        return dict(self.winners)


def _seeds(plan_seed: int, stage: int, candidate: int, rep: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence([plan_seed, stage, candidate, rep]).generate_state(2, np.uint32)
    return int(a), int(b)


def _job(args) -> SweepRow:
    train_set, test_set, plan, stage_name, stage_idx, cand_idx, rep, setting = args
    shuffle_seed, sampler_seed = _seeds(plan.seed, stage_idx, cand_idx, rep)
    sampler: SamplerConfig = plan.baseline.sampler.replace(rng_seed=sampler_seed)
    cfg = replace(
        plan.baseline,
        epochs=setting["epochs"],
        batch_size=setting["batch_size"],
        sampler=sampler,
        shuffle_seed=shuffle_seed,
    )
    topology = BmTopology(train_set.dim * train_set.bits_per_dim, setting["hidden_units"], plan.laterals)
    m = run_experiment(train_set, test_set, topology, cfg, plan.percentile).metrics
    return SweepRow(
        stage_name, setting[stage_name], rep, setting["hidden_units"], setting["epochs"],
        setting["batch_size"], m.f1, m.precision, m.recall,
    )


def worker_count() -> int:
    """``EBM_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("EBM_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


def run_sweep(data: Dataset, plan: SweepPlan, workers: Optional[int] = None) -> SweepReport:
    """Greedy sweep; results do not depend on ``workers`` because every job seeds itself."""
    if data.labels is None:
        raise InvalidPlan("the sweep needs a labeled dataset to score candidates")
    train_set, test_set = split(data, plan.split_ratio, plan.split_seed)
    workers = worker_count() if workers is None else workers
    current = {
        "hidden_units": plan.hidden_units,
        "epochs": plan.baseline.epochs,
        "batch_size": plan.baseline.batch_size,
    }
    rows: list[SweepRow] = []
    mean_f1: dict[str, dict[int, float]] = {}
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for stage_idx, stage in enumerate(STAGES):
            if stage not in plan.candidates:
                continue
            values = [int(v) for v in plan.candidates[stage]]
            jobs = [
                (train_set, test_set, plan, stage, stage_idx, ci, rep, {**current, stage: v})
                for ci, v in enumerate(values)
                for rep in range(plan.repetitions)
            ]
            results = list(pool.map(_job, jobs)) if pool else [_job(j) for j in jobs]
            rows.extend(results)
            means = {v: float(np.mean([r.f1 for r in results if r.candidate == v])) for v in values}
            mean_f1[stage] = means
            best = max(means.values())
            # ties go to the smallest (cheapest) value
            current[stage] = min(v for v, f in means.items() if f == best)
    finally:
        if pool:
            pool.shutdown()
    return SweepReport(rows, current, mean_f1)
