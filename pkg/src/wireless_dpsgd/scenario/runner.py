"""Run (lambda_target, path-loss index) grids end to end and write results."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from ..bound import BoundParams, lambda_grid, lambda_sweep
from ..dpsgd.engine import TrainingTrace, train
from ..optimizer import InfeasibleTarget, OptimizerConfig, optimize_rates
from ..propagation import DomainError, build_channel_matrix
from . import io
from .config import ScenarioConfig

log = logging.getLogger(__name__)


def time_to_accuracy(trace: TrainingTrace, threshold: float, node: int = 0) -> float | None:
    """Cumulative seconds until ``node`` first reaches ``threshold``.

    Linear interpolation in cumulative time between the bracketing epochs;
    None if the threshold is never reached.
    """
    recs = trace.node(node)
    prev = None
    for r in recs:
        if r.accuracy >= threshold:
            if prev is None or r.accuracy == prev.accuracy:
                return r.total_s
            frac = (threshold - prev.accuracy) / (r.accuracy - prev.accuracy)
            return prev.total_s + frac * (r.total_s - prev.total_s)
        prev = r
    return None


def cell_name(lambda_target: float, eps: float) -> str:
    return f"lt{lambda_target:g}_eps{eps:g}"


def run_plan(config: ScenarioConfig, use_sweep: bool = True, do_train: bool = True) -> tuple[list[Path], list[dict]]:
    """Optimize (and optionally train) every grid cell.

    Returns the written file paths and one summary dict per cell.
    Infeasible cells are recorded and skipped.
    """
    out = Path(config.output_dir)
    files: list[Path] = []
    summary: list[dict] = []
    data = test = None
    if do_train:
        data, test = config.data.load(config.layout.n)

    for lt, eps in config.cells(use_sweep):
        cell = out / "cells" / cell_name(lt, eps)
        row = {"lambda_target": lt, "path_loss_index": eps}
        radio = config.radio.with_path_loss_index(eps)
        channels = build_channel_matrix(config.layout, radio)
        opt = OptimizerConfig(
            lt, config.optimizer.model_bits, config.optimizer.allow_isolation, config.optimizer.mutual_links
        )
        try:
            assignment = optimize_rates(channels, opt)
        except InfeasibleTarget as exc:
            log.warning("cell %s infeasible: %s", cell.name, exc)
            row.update(status="infeasible", detail=f"min_lambda={exc.min_lambda!r}")
            summary.append(row)
            continue
        files.append(io.write_assignment(cell / "assignment.csv", assignment))
        row.update(status="ok", **{"lambda": assignment.lam, "t_com_s": assignment.t_com})
        if do_train:
            trace = train(config.layout, assignment, config.training, data, test=test)
            files.append(io.write_trace(cell / "trace.csv", trace))
            row["final_accuracy"] = trace.final_accuracy(0)
            row["time_to_accuracy_s"] = time_to_accuracy(trace, config.accuracy_threshold)
        row["detail"] = "broadcast_order=" + " ".join(str(i) for i in config.layout.broadcast_order())
        summary.append(row)

    files.append(io.write_summary(out / "summary.csv", summary))
    return files, summary


def emit_bound_sweep(params: BoundParams, lambdas: Sequence[float], path: Path) -> Path:
    lambdas = list(lambdas)
    if not lambdas:
        raise DomainError("lambda list must not be empty")
    return io.write_bound(path, lambda_sweep(params, lambdas))


def bound_files(config: ScenarioConfig, out: Path, node_counts=None, iterations=None) -> list[Path]:
    """One sweep file per (n, K) combination."""
    node_counts = node_counts or [config.bound.node_count]
    iterations = iterations or [config.bound.iterations]
    lambdas = lambda_grid(config.bound_points)
    files = []
    for n in node_counts:
        for k in iterations:
            params = BoundParams(**{**asdict(config.bound), "node_count": int(n), "iterations": k})
            tag = "inf" if math.isinf(k) else str(int(k))
            files.append(emit_bound_sweep(params, lambdas, Path(out) / f"bound_n{int(n)}_K{tag}.csv"))
    return files


def resolved_config(config: ScenarioConfig) -> dict:
    return {
        "layout": [list(c) for c in config.layout.coords],
        "layout_label": config.layout.label,
        "radio": asdict(config.radio),
        "optimizer": asdict(config.optimizer),
        "training": {**asdict(config.training), "model": str(config.training.model)},
        "data": {k: str(v) if isinstance(v, Path) else v for k, v in asdict(config.data).items()},
        "bound": asdict(config.bound),
        "sweep": {
            "lambda_target": config.sweep_lambda_targets,
            "path_loss_index": config.sweep_path_loss_indices,
        },
        "accuracy_threshold": config.accuracy_threshold,
    }
