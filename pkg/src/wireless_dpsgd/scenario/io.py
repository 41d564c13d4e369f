"""CSV/JSON writers and their readers.

Floats are written with ``repr`` so every value round-trips exactly and
reruns with the same seed produce byte-identical files. No timestamps go
into CSVs; those live only in the run manifest.
"""
from __future__ import annotations

import csv
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy

from .. import __version__
from .._backend import DEFAULT as SEARCH_BACKEND
from ..dpsgd.engine import EpochRecord, TrainingTrace
from ..optimizer import RateAssignment, assignment_report
from ..propagation import ChannelMatrix, NodeLayout

TRACE_HEADER = ["epoch", "node", "accuracy", "loss", "compute_s", "comm_s", "total_s", "test_accuracy", "test_loss"]
ASSIGNMENT_HEADER = ["node", "rate_bps", "reached", "lambda", "t_com_s"]
BOUND_HEADER = ["lambda", "total", "sync", "network"]
CHANNEL_HEADER = ["i", "j", "distance_m", "capacity_bps", "effective_bps"]
SUMMARY_HEADER = [
    "lambda_target",
    "path_loss_index",
    "status",
    "lambda",
    "t_com_s",
    "final_accuracy",
    "time_to_accuracy_s",
    "detail",
]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _read(path: Path, header: Sequence[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(header):
            raise ValueError(f"{path}: expected header {list(header)}, got {reader.fieldnames}")
        return list(reader)


def write_trace(path: Path, trace: TrainingTrace) -> Path:
    rows = (
        (r.epoch, r.node, r.accuracy, r.loss, r.compute_s, r.comm_s, r.total_s, r.test_accuracy, r.test_loss)
        for r in trace.records
    )
    return write_csv(path, TRACE_HEADER, rows)


def read_trace(path: Path) -> list[EpochRecord]:
    return [
        EpochRecord(
            int(d["epoch"]),
            int(d["node"]),
            float(d["accuracy"]),
            float(d["loss"]),
            float(d["compute_s"]),
            float(d["comm_s"]),
            float(d["test_accuracy"]),
            float(d["test_loss"]),
        )
        for d in _read(path, TRACE_HEADER)
    ]


def write_assignment(path: Path, assignment: RateAssignment) -> Path:
    rows = (
        (r["node"], r["rate_bps"], " ".join(str(j) for j in r["reached"]), r["lambda"], r["t_com_s"])
        for r in assignment_report(assignment)
    )
    return write_csv(path, ASSIGNMENT_HEADER, rows)


def read_assignment(path: Path) -> list[dict]:
    out = []
    for d in _read(path, ASSIGNMENT_HEADER):
        out.append(
            {
                "node": int(d["node"]),
                "rate_bps": float(d["rate_bps"]),
                "reached": [int(v) for v in d["reached"].split()],
                "lambda": float(d["lambda"]),
                "t_com_s": float(d["t_com_s"]),
            }
        )
    return out


def write_bound(path: Path, rows) -> Path:
    return write_csv(path, BOUND_HEADER, rows)


def read_bound(path: Path) -> list[tuple[float, float, float, float]]:
    return [tuple(float(d[k]) for k in BOUND_HEADER) for d in _read(path, BOUND_HEADER)]


def write_channel(path: Path, layout: NodeLayout, channels: ChannelMatrix) -> Path:
    dist = layout.distances()
    eff = channels.effective
    rows = (
        (i, j, dist[i, j], channels.capacity[i, j], eff[i, j])
        for i in range(layout.n)
        for j in range(layout.n)
        if i != j
    )
    return write_csv(path, CHANNEL_HEADER, rows)


def read_channel(path: Path) -> np.ndarray:
    rows = _read(path, CHANNEL_HEADER)
    n = max(int(d["i"]) for d in rows) + 1 if rows else 1
    cap = np.full((n, n), np.inf)
    for d in rows:
        cap[int(d["i"]), int(d["j"])] = float(d["capacity_bps"])
    return cap


def write_summary(path: Path, rows: Iterable[dict]) -> Path:
    return write_csv(path, SUMMARY_HEADER, ([r.get(k) for k in SUMMARY_HEADER] for r in rows))


def read_summary(path: Path) -> list[dict]:
    out = []
    for d in _read(path, SUMMARY_HEADER):
        rec = dict(d)
        for k in ("lambda_target", "path_loss_index", "lambda", "t_com_s", "final_accuracy", "time_to_accuracy_s"):
            rec[k] = parse_float(d[k])
        out.append(rec)
    return out


def write_manifest(path: Path, command: str, config_text: str, resolved: dict, seeds: dict, files: list[str]) -> Path:
    manifest = {
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "versions": {
            "wireless_dpsgd": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "search_backend": SEARCH_BACKEND,
        },
        "argv": sys.argv,
        "seeds": seeds,
        "config": config_text,
        "resolved": resolved,
        "files": files,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return path
