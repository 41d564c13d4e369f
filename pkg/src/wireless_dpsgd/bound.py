"""D-PSGD convergence upper bound as a function of the density parameter.

The bound on the average squared gradient norm splits into a
fully-synchronized SGD part and a network-error part that depends only on
``lam``:

    sync    = 2 (F1 - Finf) / (eta K) + eta L sigma^2 / n
    network = eta^2 L^2 sigma^2 ((1 + lam^2) / (1 - lam^2) - 1)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .propagation import DomainError

INFINITE_ITERATIONS = math.inf


@dataclass(frozen=True)
class BoundParams:
    lipschitz: float = 1.0
    variance: float = 1.0
    beta: float = 0.0  # bounded-variance slope; carried but not used by the bound
    learning_rate: float = 0.01
    f_initial: float = 1.0
    f_inf: float = 0.0
    iterations: float = INFINITE_ITERATIONS
    node_count: int = 6

    def __post_init__(self):
        checks = [
            (self.lipschitz > 0, "lipschitz > 0"),
            (self.variance >= 0, "variance >= 0"),
            (self.beta >= 0, "beta >= 0"),
            (self.learning_rate > 0, "learning_rate > 0"),
            (self.f_initial >= self.f_inf, "f_initial >= f_inf"),
            (self.iterations >= 1, "iterations >= 1"),
            (self.node_count >= 1, "node_count >= 1"),
        ]
        for ok, what in checks:
            if not ok:
                raise DomainError(f"invalid BoundParams: requires {what}")
        if self.iterations != INFINITE_ITERATIONS and self.iterations != int(self.iterations):
            raise DomainError("iterations must be an integer or INFINITE_ITERATIONS")


class BoundValue(NamedTuple):
    total: float
    sync_term: float
    network_term: float


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam < 1.0:
        raise DomainError(f"lambda must lie in [0, 1), got {lam}")


def sync_term(p: BoundParams) -> float:
    eta, L, s2 = p.learning_rate, p.lipschitz, p.variance
    vanishing = 0.0 if p.iterations == INFINITE_ITERATIONS else 2.0 * (p.f_initial - p.f_inf) / (eta * p.iterations)
    return vanishing + eta * L * s2 / p.node_count


def network_term(p: BoundParams, lam: float) -> float:
    _check_lambda(lam)
    eta, L, s2 = p.learning_rate, p.lipschitz, p.variance
    lam2 = lam * lam
    # (1+l2)/(1-l2) - 1 == 2 l2 / (1 - l2); the latter is exact at lam = 0
    return eta**2 * L**2 * s2 * (2.0 * lam2 / (1.0 - lam2))


def bound_value(p: BoundParams, lam: float) -> BoundValue:
    net = network_term(p, lam)
    sync = sync_term(p)
    return BoundValue(sync + net, sync, net)


def learning_rate_feasible(p: BoundParams, lam: float) -> bool:
    _check_lambda(lam)
    eta, L = p.learning_rate, p.lipschitz
    return eta * L + 5.0 * eta**2 * L**2 * (1.0 / (1.0 - lam)) ** 2 <= 1.0


def lambda_sweep(p: BoundParams, lambdas: Iterable[float]) -> list[tuple[float, float, float, float]]:
    """Rows ``(lam, total, sync, network)`` in input order."""
    rows = []
    for lam in lambdas:
        v = bound_value(p, lam)
        rows.append((float(lam), v.total, v.sync_term, v.network_term))
    return rows


def lambda_grid(points: int = 100, upper: float = 0.999) -> list[float]:
    if points < 1:
        raise DomainError("need at least one grid point")
    if points == 1:
        return [0.0]
    return [upper * k / (points - 1) for k in range(points)]
