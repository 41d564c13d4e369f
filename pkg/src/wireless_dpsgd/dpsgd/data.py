"""Datasets: seeded Gaussian class clusters, CSV ingestion, IID partitioning."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)


def gaussian_clusters(
    n_samples: int,
    n_features: int = 20,
    n_classes: int = 10,
    separation: float = 1.0,
    seed: int = 0,
) -> Dataset:
    """Isotropic unit-variance clusters around random class means.

    ``separation`` scales the spread of class means; smaller values mean
    more overlap and a lower attainable accuracy.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    means = rng.normal(0.0, separation, size=(n_classes, n_features))
    labels = rng.integers(0, n_classes, size=n_samples)
    x = means[labels] + rng.normal(size=(n_samples, n_features))
    return Dataset(x, labels.astype(np.int64), n_classes)


def load_csv(path: str | Path, label_column: str | int = "label", n_classes: int | None = None) -> Dataset:
    """One sample per row; every non-label column is a float feature."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if isinstance(label_column, int):
            li = label_column
        else:
            try:
                li = header.index(label_column)
            except ValueError:
                raise ValueError(f"{path}: no label column {label_column!r} in header {header}") from None
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                labels.append(int(row[li]))
                feats.append([float(v) for k, v in enumerate(row) if k != li])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    labels = np.asarray(labels, dtype=np.int64)
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    return Dataset(np.asarray(feats, dtype=float), labels, k)


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    rng = np.random.default_rng([seed, 0x7E57])
    perm = rng.permutation(len(data))
    n_test = int(round(test_fraction * len(data)))
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def partition(n_samples: int, n_nodes: int, seed: int) -> list[np.ndarray]:
    """Shuffle, then deal into ``n_nodes`` contiguous near-equal chunks."""
    rng = np.random.default_rng([seed, 0xD1CE])
    return [np.asarray(p) for p in np.array_split(rng.permutation(n_samples), n_nodes)]
