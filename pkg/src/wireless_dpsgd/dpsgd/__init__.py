"""D-PSGD training engine."""
from .data import Dataset, gaussian_clusters, load_csv, partition, split
from .engine import (
    ConstantCompute,
    EpochRecord,
    MeasuredCompute,
    TrainingAborted,
    TrainingConfig,
    TrainingTrace,
    dpsgd_step,
    evaluate,
    initialize,
    local_gradient,
    train,
)
from .models import DenseModel, ModelSpec, NumericalError, build_model

__all__ = [
    "ConstantCompute",
    "Dataset",
    "DenseModel",
    "EpochRecord",
    "MeasuredCompute",
    "ModelSpec",
    "NumericalError",
    "TrainingAborted",
    "TrainingConfig",
    "TrainingTrace",
    "build_model",
    "dpsgd_step",
    "evaluate",
    "gaussian_clusters",
    "initialize",
    "load_csv",
    "local_gradient",
    "partition",
    "split",
    "train",
]
