"""Path-loss radio model and pairwise channel capacities.

Received power follows a log-distance path loss, capacity is the Shannon
rate over bandwidth ``B`` with noise power spectral density ``N0`` given in
dBm/Hz, so ``gamma / B`` is a dimensionless SNR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain of a model formula."""


@dataclass(frozen=True)
class RadioParams:
    tx_power: float = 0.0  # dBm
    bandwidth: float = 20e6  # Hz
    noise_density: float = -172.0  # dBm/Hz
    path_loss_index: float = 3.0
    fading_margin: float = 0.0  # bit/s

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError(f"bandwidth must be > 0, got {self.bandwidth}")
        if not self.path_loss_index > 0:
            raise DomainError(f"path_loss_index must be > 0, got {self.path_loss_index}")
        if not self.fading_margin >= 0:
            raise DomainError(f"fading_margin must be >= 0, got {self.fading_margin}")

    def with_path_loss_index(self, eps: float) -> "RadioParams":
        return RadioParams(self.tx_power, self.bandwidth, self.noise_density, eps, self.fading_margin)


@dataclass(frozen=True)
class NodeLayout:
    """Node positions in meters; node ``i`` sits at ``coords[i]``."""

    coords: tuple[tuple[float, float], ...]
    label: str = field(default="", compare=False)

    def __post_init__(self):
        coords = tuple((float(x), float(y)) for x, y in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 1:
            raise DomainError("layout needs at least one node")
        if len(set(coords)) != len(coords):
            raise DomainError("layout has duplicate coordinates (zero pairwise distance)")

    @classmethod
    def from_nodes(cls, nodes: Iterable[tuple[int, float, float]], label: str = "") -> "NodeLayout":
        """Build from ``(id, x, y)`` triples; ids must be exactly 0..n-1."""
        nodes = sorted(nodes, key=lambda t: t[0])
        ids = [int(t[0]) for t in nodes]
        if ids != list(range(len(ids))):
            raise DomainError(f"node ids must be unique and contiguous from 0, got {ids}")
        return cls(tuple((t[1], t[2]) for t in nodes), label=label)

    @property
    def n(self) -> int:
        return len(self.coords)

    def distances(self) -> np.ndarray:
        xy = np.asarray(self.coords, dtype=float)
        diff = xy[:, None, :] - xy[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    def broadcast_order(self) -> list[int]:
        """TDM slot order: west to east, ties broken by node id."""
        return sorted(range(self.n), key=lambda i: (self.coords[i][0], i))


def received_power(params: RadioParams, distance: float) -> float:
    if not distance > 0:
        raise DomainError(f"distance must be > 0, got {distance}")
    return params.tx_power - 10.0 * params.path_loss_index * math.log10(distance)


def snr(params: RadioParams, distance: float) -> float:
    return 10.0 ** ((received_power(params, distance) - params.noise_density) / 10.0)


def channel_capacity(params: RadioParams, distance: float) -> float:
    """Shannon capacity in bit/s at ``distance`` meters."""
    gamma = snr(params, distance)
    # log1p keeps long, low-SNR links strictly positive
    return params.bandwidth * math.log1p(gamma / params.bandwidth) / math.log(2.0)


def effective_capacity(params: RadioParams, distance: float) -> float:
    """Capacity after the fading back-off, floored at zero."""
    return max(channel_capacity(params, distance) - params.fading_margin, 0.0)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Pairwise capacities ``capacity[i, j]`` from node i to node j.

    The diagonal holds ``inf``: a node always has its own model.
    """

    capacity: np.ndarray
    fading_margin: float = 0.0

    def __post_init__(self):
        c = np.array(self.capacity, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError(f"capacity must be square, got shape {c.shape}")
        np.fill_diagonal(c, np.inf)
        c.setflags(write=False)
        object.__setattr__(self, "capacity", c)

    @property
    def n(self) -> int:
        return self.capacity.shape[0]

    @property
    def effective(self) -> np.ndarray:
        eff = np.maximum(self.capacity - self.fading_margin, 0.0)
        np.fill_diagonal(eff, np.inf)
        return eff


def build_channel_matrix(layout: NodeLayout, params: RadioParams) -> ChannelMatrix:
    n = layout.n
    cap = np.full((n, n), np.inf)
    for i in range(n):
        xi, yi = layout.coords[i]
        for j in range(n):
            if i == j:
                continue
            xj, yj = layout.coords[j]
            cap[i, j] = channel_capacity(params, math.hypot(xi - xj, yi - yj))
    return ChannelMatrix(cap, params.fading_margin)


# Six nodes in a 200 m x 200 m square. Picked by search so that the optimized
# topology for each lambda_target in 0.1..0.9 is the same for path-loss
# indices 3..6, and so that no node sees two neighbours at equal distance.
SIX_NODE_LAYOUT: tuple[tuple[float, float], ...] = (
    (25.0, 100.0),
    (120.0, 5.0),
    (30.0, 185.0),
    (15.0, 25.0),
    (190.0, 125.0),
    (75.0, 100.0),
)


def six_node_layout() -> NodeLayout:
    return NodeLayout(SIX_NODE_LAYOUT, label="six-node 200m x 200m")


def random_layout(n: int, rng: np.random.Generator, side: float = 200.0, min_separation: float = 1.0) -> NodeLayout:
    """Uniform random placement in a ``side`` x ``side`` square."""
    pts: list[tuple[float, float]] = []
    while len(pts) < n:
        x, y = rng.uniform(0.0, side, size=2)
        if all(math.hypot(x - a, y - b) >= min_separation for a, b in pts):
            pts.append((float(x), float(y)))
    return NodeLayout(tuple(pts), label=f"random n={n}")


def layout_from_rows(rows: Sequence[Sequence[float]]) -> NodeLayout:
    return NodeLayout.from_nodes((int(r[0]), float(r[1]), float(r[2])) for r in rows)
