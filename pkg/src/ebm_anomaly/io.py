"""On-disk formats: dataset CSV, model JSON, report CSVs and run manifests.

Floats are written with ``repr`` (shortest round-trip decimal), so a model
written and read back has bit-identical parameters.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from . import __version__
from .anomaly import Threshold
from .errors import EBMError
from .types import BmTopology, Dataset, Laterals, ModelParams

MODEL_FORMAT = "ebm-anomaly-model"
MODEL_VERSION = 1


class FormatError(EBMError, ValueError):
    """A file exists but does not follow the expected schema."""


def _jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(path: Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


# -- datasets ---------------------------------------------------------------


def write_dataset_csv(path: Path, data: Dataset, include_labels: bool = True) -> None:
    with_labels = include_labels and data.labels is not None
    header = [f"x{i}" for i in range(data.dim)] + (["label"] if with_labels else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, pt in enumerate(data.points.tolist()):
            w.writerow(pt + ([int(data.labels[i])] if with_labels else []))


def read_dataset_csv(path: Path, bits_per_dim: int = 7) -> Dataset:
    """Read ``x0..x{d-1}[,label]``. Raises ``FormatError`` on malformed content."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise FormatError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    has_label = bool(header) and header[-1] == "label"
    coord_cols = header[:-1] if has_label else header
    if not coord_cols or coord_cols != [f"x{i}" for i in range(len(coord_cols))]:
        raise FormatError(f"{path}: header must be x0,...,x{{d-1}}[,label], got {header}")
    d = len(coord_cols)
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            points.append([int(v) for v in row[:d]])
            if has_label:
                lab = int(row[d])
                if lab not in (0, 1):
                    raise ValueError(lab)
                labels.append(bool(lab))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-integer or invalid field in {row}") from None
    pts = np.array(points, dtype=np.int64).reshape(-1, d)
    return Dataset(pts, np.array(labels, dtype=bool) if has_label else None, bits_per_dim)


# -- models -----------------------------------------------------------------


@dataclass(frozen=True)
class ModelFile:
    params: ModelParams
    threshold: Optional[Threshold]
    dim: int
    bits_per_dim: int
    config: dict


def save_model(
    path: Path,
    params: ModelParams,
    threshold: Optional[Threshold],
    dim: int,
    bits_per_dim: int,
    config: Optional[dict] = None,
) -> None:
    top = params.topology
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "topology": {
            "num_visible": top.num_visible,
            "num_hidden": top.num_hidden,
            "laterals": top.laterals.value,
        },
        "encoding": {"dim": dim, "bits_per_dim": bits_per_dim},
        "params": {
            "w_vh": params.w_vh.tolist(),
            "w_vv": None if params.w_vv is None else params.w_vv.tolist(),
            "b_v": params.b_v.tolist(),
            "b_h": params.b_h.tolist(),
            "temperature": params.temperature,
            "effective_temperature": params.effective_temperature,
        },
        "threshold": None if threshold is None else dataclasses.asdict(threshold),
        "config": _jsonable(config or {}),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path: Path) -> ModelFile:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read model {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path} is not a model file")
    try:
        t = doc["topology"]
        top = BmTopology(int(t["num_visible"]), int(t["num_hidden"]), Laterals(t["laterals"]))
        pr = doc["params"]
        n, m = top.num_visible, top.num_hidden
        params = ModelParams(
            topology=top,
            w_vh=np.array(pr["w_vh"], dtype=np.float64).reshape(n, m),
            w_vv=None if pr["w_vv"] is None else np.array(pr["w_vv"], dtype=np.float64),
            b_v=np.array(pr["b_v"], dtype=np.float64),
            b_h=np.array(pr["b_h"], dtype=np.float64),
            temperature=pr["temperature"],
            effective_temperature=pr["effective_temperature"],
        )
        th = doc.get("threshold")
        threshold = None if th is None else Threshold(float(th["value"]), float(th["percentile"]), int(th["source_count"]))
        enc = doc["encoding"]
        return ModelFile(params, threshold, int(enc["dim"]), int(enc["bits_per_dim"]), doc.get("config", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed model: {exc}") from None


# -- reports ----------------------------------------------------------------


def write_rows_csv(path: Path, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_train_report_csv(path: Path, report) -> None:
    header = [
        "epoch", "mean_free_energy", "grad_norm_w_vh", "grad_norm_w_vv",
        "grad_norm_b_v", "grad_norm_b_h", "exact_kl",
    ]
    rows = [
        [
            r.epoch, r.mean_free_energy, r.grad_norms["w_vh"], r.grad_norms["w_vv"],
            r.grad_norms["b_v"], r.grad_norms["b_h"], "" if r.exact_kl is None else r.exact_kl,
        ]
        for r in report.epochs
    ]
    write_rows_csv(path, header, rows)


# -- manifests --------------------------------------------------------------


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def manifest_path(artifact: Path) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.stem + ".manifest.json")


def write_manifest(
    path: Path,
    command: str,
    argv: list[str],
    config: Any,
    seeds: dict,
    inputs: Iterable[Path],
    outputs: Iterable[Path],
    wall_time: float,
    extra: Optional[dict] = None,
) -> None:
    doc = {
        "tool": "ebm-anomaly",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "config": _jsonable(config),
        "seeds": _jsonable(seeds),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "wall_time_s": wall_time,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        doc.update(_jsonable(extra))
    dump_json(path, doc)
