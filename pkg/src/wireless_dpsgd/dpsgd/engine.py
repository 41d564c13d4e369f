"""Round-synchronous D-PSGD over a fixed averaging matrix.

Per iteration every node samples a batch from its own partition, computes
its gradient at its current model, and then
``X <- W X - eta * G`` is applied to the stacked models.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..consensus import averaging_weights
from ..optimizer import RateAssignment
from .data import Dataset, partition
from .models import DenseModel, ModelSpec, NumericalError, build_model


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.01
    batch_size: int = 1
    epochs: int = 10
    seed: int = 0
    model: ModelSpec = ModelSpec()
    loss: str = "cross_entropy"
    iterations_per_epoch: int | None = None  # default: ceil(partition / batch)
    compute_seconds_per_iteration: float = 1e-3
    measure_compute: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.iterations_per_epoch is not None and self.iterations_per_epoch < 1:
            raise ValueError("iterations_per_epoch must be >= 1")
        if self.compute_seconds_per_iteration < 0:
            raise ValueError("compute_seconds_per_iteration must be >= 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    node: int
    accuracy: float
    loss: float
    compute_s: float
    comm_s: float
    test_accuracy: float = math.nan
    test_loss: float = math.nan

    @property
    def total_s(self) -> float:
        return self.compute_s + self.comm_s


@dataclass
class TrainingTrace:
    records: list[EpochRecord] = field(default_factory=list)
    broadcast_order: list[int] = field(default_factory=list)
    t_com: float = 0.0
    iterations_per_epoch: int = 0

    def node(self, i: int) -> list[EpochRecord]:
        return [r for r in self.records if r.node == i]

    def final_accuracy(self, node: int = 0) -> float:
        return self.node(node)[-1].accuracy


class TrainingAborted(NumericalError):
    def __init__(self, message: str, trace: TrainingTrace):
        super().__init__(message)
        self.trace = trace


def initialize(config: TrainingConfig, n: int, model: DenseModel) -> np.ndarray:
    """Stacked ``(n, N)`` models, every row the same seeded ``x0``."""
    x0 = model.init_params(np.random.default_rng([config.seed, 0x1417]))
    return np.tile(x0, (n, 1))


def local_gradient(model: DenseModel, params: np.ndarray, x: np.ndarray, y: np.ndarray, loss: str, iteration: int = -1):
    value, grad = model.loss_and_grad(params, x, y, loss)
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"non-finite gradient at iteration {iteration}")
    return grad


def dpsgd_step(models: np.ndarray, w: np.ndarray, gradients: np.ndarray, learning_rate: float) -> np.ndarray:
    models = np.asarray(models)
    gradients = np.asarray(gradients)
    w = np.asarray(w)
    n = models.shape[0]
    if w.shape != (n, n) or gradients.shape != models.shape:
        raise ValueError(f"shape mismatch: W {w.shape}, X {models.shape}, G {gradients.shape}")
    return w @ models - learning_rate * gradients


def evaluate(model: DenseModel, models: np.ndarray, data: Dataset, loss: str):
    """Per-node accuracy and mean loss on ``data``."""
    acc = np.empty(models.shape[0])
    val = np.empty(models.shape[0])
    for i, p in enumerate(models):
        out = model.outputs(p, data.features)
        acc[i] = float(np.mean(np.argmax(out, axis=1) == data.labels))
        val[i] = model.loss(p, data.features, data.labels, loss)
    return acc, val


class ConstantCompute:
    """Charge a fixed number of seconds per iteration."""

    def __init__(self, seconds_per_iteration: float):
        self.seconds = seconds_per_iteration

    def run(self, fn):
        fn()
        return self.seconds


class MeasuredCompute:
    """Charge the wall-clock time of the local update phase, divided across nodes.

    Nodes would compute in parallel, so the per-iteration cost is the mean
    per-node time rather than the serial total.
    """

    def __init__(self, n_nodes: int):
        self.n = n_nodes

    def run(self, fn):
        t0 = time.perf_counter()
        fn()
        return (time.perf_counter() - t0) / self.n


def compute_model_for(config: TrainingConfig, n: int):
    return MeasuredCompute(n) if config.measure_compute else ConstantCompute(config.compute_seconds_per_iteration)


def train(
    layout,
    assignment: RateAssignment,
    config: TrainingConfig,
    dataset: Dataset,
    compute_model=None,
    test: Dataset | None = None,
    eval_data: Dataset | None = None,
) -> TrainingTrace:
    """Run D-PSGD and return per-epoch, per-node records.

    Accuracy and loss are measured on ``eval_data`` (default: the full
    training set); ``test`` adds held-out columns.
    """
    n = assignment.n
    if layout is not None and layout.n != n:
        raise ValueError(f"layout has {layout.n} nodes, assignment has {n}")
    parts = partition(len(dataset), n, config.seed)
    if any(len(p) == 0 for p in parts):
        raise ValueError("dataset too small: some node got no samples")
    model = build_model(config.model, dataset.n_features, dataset.n_classes)
    w = averaging_weights(assignment.topology)
    x = initialize(config, n, model)
    rngs = [np.random.default_rng(config.seed ^ i) for i in range(n)]
    k_per_epoch = config.iterations_per_epoch or math.ceil(max(len(p) for p in parts) / config.batch_size)
    compute_model = compute_model or compute_model_for(config, n)
    eval_data = eval_data or dataset

    trace = TrainingTrace(
        broadcast_order=layout.broadcast_order() if layout is not None else list(range(n)),
        t_com=assignment.t_com,
        iterations_per_epoch=k_per_epoch,
    )

    def log(epoch: int, compute_s: float, comm_s: float) -> None:
        acc, val = evaluate(model, x, eval_data, config.loss)
        tacc = tval = [math.nan] * n
        if test is not None:
            tacc, tval = evaluate(model, x, test, config.loss)
        for i in range(n):
            trace.records.append(
                EpochRecord(epoch, i, float(acc[i]), float(val[i]), compute_s, comm_s, float(tacc[i]), float(tval[i]))
            )

    compute_s = comm_s = 0.0
    log(0, compute_s, comm_s)
    grads = np.empty_like(x)
    it = 0
    for epoch in range(1, config.epochs + 1):
        for _ in range(k_per_epoch):

            def local_phase():
                for i in range(n):
                    batch = parts[i][rngs[i].integers(0, len(parts[i]), size=config.batch_size)]
                    grads[i] = local_gradient(
                        model, x[i], dataset.features[batch], dataset.labels[batch], config.loss, it
                    )

            try:
                compute_s += compute_model.run(local_phase)
            except NumericalError as exc:
                raise TrainingAborted(str(exc), trace) from exc
            x = dpsgd_step(x, w, grads, config.learning_rate)
            comm_s += assignment.t_com
            it += 1
        log(epoch, compute_s, comm_s)
    return trace
