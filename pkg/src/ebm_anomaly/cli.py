"""Command-line interface: ``gen``, ``train``, ``score``, ``sweep`` and ``energies``.

Exit codes: 0 ok, 2 usage, 3 generation infeasible, 4 I/O or parse error,
5 model/dataset mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .anomaly import classify, fit_threshold
from .datagen import GenConfig, generate, split
from .energy import free_energies
from .errors import CoordinateOutOfRange, EBMError, InvalidConfig, InvalidPlan, PlacementInfeasible
from .evaluation import STAGES, SweepPlan, run_sweep, score, worker_count
from .io import (
    FormatError,
    dump_json,
    load_model,
    manifest_path,
    read_dataset_csv,
    save_model,
    write_dataset_csv,
    write_manifest,
    write_rows_csv,
    write_train_report_csv,
)
from .samplers import SamplerConfig
from .training import TrainConfig, train
from .types import BmTopology, Laterals

log = logging.getLogger("ebm_anomaly")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO, EXIT_MISMATCH = 0, 2, 3, 4, 5

TOPOLOGIES = {"rbm": Laterals.NONE, "semi-restricted": Laterals.VISIBLE_VISIBLE}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_dataset(path: str, bits: int):
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_IO, f"dataset not found: {path}")
    try:
        return read_dataset_csv(p, bits)
    except CoordinateOutOfRange as exc:
        raise CliError(EXIT_MISMATCH, f"{path}: {exc}") from None
    except (FormatError, EBMError) as exc:
        raise CliError(EXIT_IO, str(exc)) from None


def _load_model(path: str):
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_IO, f"model not found: {path}")
    try:
        return load_model(p)
    except (FormatError, EBMError) as exc:
        raise CliError(EXIT_IO, str(exc)) from None


def _load_for_model(model, path: str):
    data = _load_dataset(path, model.bits_per_dim)
    width = data.dim * data.bits_per_dim
    if width != model.params.topology.num_visible or data.dim != model.dim:
        raise CliError(
            EXIT_MISMATCH,
            f"{path} encodes to {width} bits but the model has {model.params.topology.num_visible} visible units",
        )
    return data


def _sampler_from_args(a) -> SamplerConfig:
    return SamplerConfig(
        kind=a.sampler,
        num_reads=a.reads,
        gibbs_burn_in=a.burn_in,
        gibbs_thin=a.thin,
        sa_sweeps=a.sweeps,
        sa_beta_start=a.beta_start,
        sa_beta_end=a.beta_end,
        rng_seed=a.sampler_seed,
    )


# -- commands ---------------------------------------------------------------


def cmd_gen(a, argv) -> int:
    t0 = time.perf_counter()
    try:
        cfg = GenConfig(
            dim=a.dim, bits_per_dim=a.bits, num_clusters=a.clusters, points_per_cluster=a.per_cluster,
            num_anomalies=a.anomalies, cluster_std=a.std, min_anomaly_separation=a.sep, seed=a.seed,
        )
        data = generate(cfg)
        train_set, test_set = split(data, a.split_ratio, a.split_seed)
    except PlacementInfeasible as exc:
        raise CliError(EXIT_INFEASIBLE, str(exc)) from None
    except EBMError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "data.csv", out / "train.csv", out / "test.csv"]
    for path, part in zip(paths, (data, train_set, test_set)):
        write_dataset_csv(path, part)
    write_manifest(
        out / "manifest.json", "gen", argv, {"gen": cfg, "split_ratio": a.split_ratio},
        {"seed": a.seed, "split_seed": a.split_seed}, [], paths, time.perf_counter() - t0,
    )
    print(f"wrote {len(data)} points ({len(train_set)} train / {len(test_set)} test) to {out}")
    return EXIT_OK


def cmd_train(a, argv) -> int:
    t0 = time.perf_counter()
    try:
        cfg = TrainConfig(
            epochs=a.epochs, batch_size=a.batch, learning_rate=a.lr, sampler=_sampler_from_args(a),
            shuffle_seed=a.seed, init_scale=a.init_scale, temperature=a.temperature,
            effective_temperature=a.effective_temperature,
        )
        if a.hidden < 0:
            raise InvalidConfig("--hidden must be >= 0")
        if not 0 < a.percentile < 100:
            raise InvalidConfig("--percentile must lie in (0, 100)")
    except EBMError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None

    data = _load_dataset(a.data, a.bits)
    if len(data) == 0:
        raise CliError(EXIT_IO, f"{a.data} has no rows")
    enc = data.encode()
    topology = BmTopology(enc.width, a.hidden, TOPOLOGIES[a.topology])
    report = train(enc, topology, cfg)
    threshold = fit_threshold(report.params, enc, a.percentile)

    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report_path = Path(a.report) if a.report else out.with_name(out.stem + ".report.csv")
    config = {"train": cfg, "topology": a.topology, "hidden": a.hidden, "percentile": a.percentile}
    save_model(out, report.params, threshold, data.dim, data.bits_per_dim, config)
    write_train_report_csv(report_path, report)
    write_manifest(
        manifest_path(out), "train", argv, config,
        {"shuffle_seed": a.seed, "sampler_seed": a.sampler_seed},
        [Path(a.data)], [out, report_path], time.perf_counter() - t0,
        extra={"epoch_wall_times_s": [r.wall_time for r in report.epochs]},
    )
    print(f"trained {a.topology} with {a.hidden} hidden units; threshold {threshold.value!r}")
    return EXIT_OK


def cmd_score(a, argv) -> int:
    t0 = time.perf_counter()
    model = _load_model(a.model)
    if model.threshold is None:
        raise CliError(EXIT_IO, f"{a.model} carries no threshold")
    data = _load_for_model(model, a.data)
    enc = data.encode()
    verdicts = classify(model.params, model.threshold, enc)

    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ["index", "free_energy", "is_anomaly"] + (["label"] if data.labels is not None else [])
    rows = []
    for i, v in enumerate(verdicts):
        row = [i, v.free_energy, int(v.is_anomaly)]
        if data.labels is not None:
            row.append(int(data.labels[i]))
        rows.append(row)
    write_rows_csv(out, header, rows)
    outputs = [out]
    if data.labels is not None:
        metrics_path = Path(a.metrics) if a.metrics else out.with_name(out.stem + ".metrics.json")
        metrics = score(verdicts, data.labels)
        dump_json(metrics_path, metrics.as_dict())
        outputs.append(metrics_path)
        print(f"precision {metrics.precision:.3f} recall {metrics.recall:.3f} f1 {metrics.f1:.3f}")
    write_manifest(
        manifest_path(out), "score", argv, {"threshold": model.threshold}, {},
        [Path(a.model), Path(a.data)], outputs, time.perf_counter() - t0,
    )
    return EXIT_OK


def load_plan(path: str) -> tuple[SweepPlan, int]:
    """Parse a JSON sweep plan; returns the plan and the dataset bit width."""
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_IO, f"plan not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_IO, f"cannot read plan {path}: {exc}") from None
    try:
        topology = doc.get("topology", "rbm")
        if topology not in TOPOLOGIES:
            raise InvalidPlan(f"unknown topology {topology!r}")
        sampler = SamplerConfig(**doc.get("sampler", {}))
        baseline = TrainConfig(sampler=sampler, **doc.get("train", {}))
        cands = doc.get("candidates", {})
        if not cands:
            raise InvalidPlan("plan has no stages")
        plan = SweepPlan(
            laterals=TOPOLOGIES[topology],
            candidates={k: list(v) for k, v in cands.items()},
            hidden_units=int(doc.get("hidden_units", 16)),
            baseline=baseline,
            repetitions=int(doc.get("repetitions", 3)),
            seed=int(doc.get("seed", 0)),
            split_ratio=float(doc.get("split_ratio", 0.5)),
            split_seed=int(doc.get("split_seed", 0)),
            percentile=float(doc.get("percentile", 95.0)),
        )
        return plan, int(doc.get("bits_per_dim", 7))
    except (EBMError, TypeError, ValueError) as exc:
        raise CliError(EXIT_USAGE, f"invalid plan: {exc}") from None


def cmd_sweep(a, argv) -> int:
    t0 = time.perf_counter()
    plan, bits = load_plan(a.plan)
    data = _load_dataset(a.data, bits)
    if data.labels is None:
        raise CliError(EXIT_IO, f"{a.data} has no label column; the sweep scores candidates against labels")
    report = run_sweep(data, plan)

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    curve = out / "sweep.csv"
    chosen = out / "chosen.json"
    write_rows_csv(
        curve,
        ["stage", "candidate", "repetition", "hidden_units", "epochs", "batch_size", "f1", "precision", "recall"],
        [[r.stage, r.candidate, r.repetition, r.hidden_units, r.epochs, r.batch_size, r.f1, r.precision, r.recall]
         for r in report.rows],
    )
    dump_json(chosen, {"winners": report.winners, "mean_f1": report.mean_f1})
    write_manifest(
        out / "manifest.json", "sweep", argv, plan, {"plan_seed": plan.seed, "split_seed": plan.split_seed},
        [Path(a.plan), Path(a.data)], [curve, chosen], time.perf_counter() - t0,
        extra={"workers": worker_count()},
    )
    print("winners: " + ", ".join(f"{k}={report.winners[k]}" for k in STAGES))
    return EXIT_OK


def normalize(values: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant input maps to 0.5."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full_like(values, 0.5, dtype=np.float64)
    return (values - lo) / (hi - lo)


def cmd_energies(a, argv) -> int:
    t0 = time.perf_counter()
    model = _load_model(a.model)
    parts = []
    for spec in a.data:
        tag, sep, path = spec.partition("=")
        if not sep:
            path, tag = spec, Path(spec).stem
        data = _load_for_model(model, path)
        if data.labels is None:
            raise CliError(EXIT_IO, f"{path} has no label column")
        parts.append((tag, path, data, free_energies(model.params, data.encode().rows)))
    if not parts or sum(len(p[2]) for p in parts) == 0:
        raise CliError(EXIT_IO, "no rows to emit")

    all_f = np.concatenate([p[3] for p in parts])
    norm = normalize(all_f)
    thr = model.threshold.value if model.threshold is not None else None
    lo, hi = all_f.min(), all_f.max()
    thr_norm = None if thr is None else (0.5 if hi == lo else (thr - lo) / (hi - lo))
    rows = []
    k = 0
    for tag, _, data, f in parts:
        for i in range(len(data)):
            rows.append([tag, i, f[i], norm[k], int(data.labels[i]), "" if thr is None else thr,
                         "" if thr_norm is None else thr_norm])
            k += 1
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_rows_csv(
        out, ["split", "index", "free_energy", "normalized_energy", "label", "threshold", "threshold_normalized"],
        rows,
    )
    write_manifest(
        manifest_path(out), "energies", argv, {"normalization": "min-max over emitted rows"}, {},
        [Path(a.model)] + [Path(p[1]) for p in parts], [out], time.perf_counter() - t0,
    )
    return EXIT_OK


# -- parser -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ebm-anomaly", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a clustered dataset and split it")
    g.add_argument("--dim", type=int, default=3)
    g.add_argument("--bits", type=int, default=7)
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--per-cluster", type=int, default=200)
    g.add_argument("--anomalies", type=int, default=7)
    g.add_argument("--std", type=float, default=6.0)
    g.add_argument("--sep", type=float, default=30.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--split-ratio", type=float, default=0.5)
    g.add_argument("--split-seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model and fit its anomaly threshold")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--report", help="per-epoch CSV (default: <out>.report.csv)")
    t.add_argument("--bits", type=int, default=7)
    t.add_argument("--topology", choices=sorted(TOPOLOGIES), default="semi-restricted")
    t.add_argument("--hidden", type=int, default=82)
    t.add_argument("--sampler", choices=["exact", "gibbs", "sa"], default="sa")
    t.add_argument("--reads", type=int, default=100)
    t.add_argument("--sweeps", type=int, default=100)
    t.add_argument("--beta-start", type=float, default=0.1)
    t.add_argument("--beta-end", type=float, default=None)
    t.add_argument("--burn-in", type=int, default=100)
    t.add_argument("--thin", type=int, default=1)
    t.add_argument("--epochs", type=int, default=7)
    t.add_argument("--batch", type=int, default=10)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--percentile", type=float, default=95.0)
    t.add_argument("--temperature", type=float, default=1.0)
    t.add_argument("--effective-temperature", type=float, default=1.0)
    t.add_argument("--init-scale", type=float, default=0.1)
    t.add_argument("--seed", type=int, default=0, help="initialization and shuffling seed")
    t.add_argument("--sampler-seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("score", help="classify rows with a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True, help="verdicts CSV path")
    s.add_argument("--metrics", help="metrics JSON (default: <out>.metrics.json; labeled data only)")
    s.set_defaults(func=cmd_score)

    w = sub.add_parser("sweep", help="greedy hyperparameter sweep from a JSON plan")
    w.add_argument("--plan", required=True)
    w.add_argument("--data", required=True, help="labeled dataset; split per the plan")
    w.add_argument("--out", required=True, help="output directory")
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("energies", help="emit per-row free energies for box plots")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True, action="append", help="[TAG=]PATH, repeatable")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_energies)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return args.func(args, argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
