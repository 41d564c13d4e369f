"""Per-node transmission rates minimizing TDM sharing time under a density cap.

Each node picks one of its outgoing effective capacities as its broadcast
rate, which fixes the set of nodes it reaches. Over all such tuples we
minimize ``t_com = M * sum(1 / R_i)`` subject to ``lambda(W) <= target``.
The search is exhaustive; branches are pruned on a lower bound of
``sum(1 / R_i)`` only, so the answer equals brute-force enumeration with
ties going to the lexicographically smallest candidate-index tuple.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .consensus import (
    Connectivity,
    averaging_matrix,
    connectivity_from_rates,
)
from .propagation import ChannelMatrix, DomainError

FEASIBILITY_TOL = 1e-9


class InfeasibleTarget(RuntimeError):
    def __init__(self, lambda_target: float, min_lambda: float):
        super().__init__(
            f"no rate assignment reaches lambda <= {lambda_target}; best achievable is {min_lambda:.12g}"
        )
        self.lambda_target = lambda_target
        self.min_lambda = min_lambda


@dataclass(frozen=True)
class OptimizerConfig:
    lambda_target: float
    model_bits: float
    allow_isolation: bool = False
    mutual_links: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lambda_target < 1.0:
            raise DomainError(f"lambda_target must lie in [0, 1), got {self.lambda_target}")
        if not self.model_bits > 0:
            raise DomainError(f"model_bits must be > 0, got {self.model_bits}")


@dataclass(frozen=True, eq=False)
class RateAssignment:
    rates: tuple[float, ...]
    topology: Connectivity
    lam: float
    t_com: float
    model_bits: float
    candidate_index: tuple[int, ...] | None = None

    @property
    def n(self) -> int:
        return len(self.rates)


def communication_time(rates: Sequence[float], model_bits: float) -> float:
    """Seconds per sharing round when nodes broadcast one after another."""
    return model_bits * inverse_rate_sum(rates)


def inverse_rate_sum(rates: Sequence[float]) -> float:
    total = 0.0
    # Left-to-right order is part of the tie-break contract; do not use fsum.
    for r in rates:
        if not r > 0:
            raise DomainError(f"rates must be positive, got {r}")
        total += 1.0 / r
    return total


def candidate_rates(channels: ChannelMatrix, node: int, allow_isolation: bool = False) -> list[float]:
    """Distinct usable effective capacities out of ``node``, fastest first.

    With ``allow_isolation`` an infinite rate (reach nobody, cost nothing)
    leads the list. A node with no usable link gets only that option.
    """
    if not 0 <= node < channels.n:
        raise DomainError(f"node {node} out of range for n={channels.n}")
    eff = np.delete(channels.effective[node], node)
    vals = sorted({float(v) for v in eff if v > 0}, reverse=True)
    if allow_isolation or not vals:
        vals.insert(0, math.inf)
    return vals


@dataclass(frozen=True, eq=False)
class CandidateTable:
    rates: list[list[float]]
    inv_rates: np.ndarray
    rows: np.ndarray
    counts: np.ndarray

    @classmethod
    def build(cls, channels: ChannelMatrix, allow_isolation: bool = False) -> "CandidateTable":
        n = channels.n
        eff = channels.effective
        rates = [candidate_rates(channels, i, allow_isolation) for i in range(n)]
        kmax = max(len(r) for r in rates)
        inv = np.full((n, kmax), np.inf)
        rows = np.zeros((n, kmax, n), dtype=np.uint8)
        for i, cand in enumerate(rates):
            for c, r in enumerate(cand):
                inv[i, c] = 1.0 / r
                rows[i, c] = eff[i] >= r
                rows[i, c, i] = 1
        counts = np.array([len(r) for r in rates], dtype=np.int32)
        return cls(rates, inv, rows, counts)


def make_assignment(
    channels: ChannelMatrix,
    rates: Sequence[float],
    model_bits: float,
    mutual_links: bool = False,
    candidate_index: tuple[int, ...] | None = None,
) -> RateAssignment:
    """Derive topology, lambda and t_com from a rate vector."""
    conn = connectivity_from_rates(channels, rates, mutual_links)
    avg = averaging_matrix(conn)
    return RateAssignment(
        tuple(float(r) for r in rates),
        conn,
        avg.lam,
        communication_time(rates, model_bits),
        float(model_bits),
        candidate_index,
    )


def optimize_rates(channels: ChannelMatrix, config: OptimizerConfig, backend: str | None = None) -> RateAssignment:
    table = CandidateTable.build(channels, config.allow_isolation)
    impl = _backend.get(backend)
    best, _, _, _ = impl.search(
        table.inv_rates, table.rows, table.counts, config.lambda_target, config.mutual_links, FEASIBILITY_TOL
    )
    if best is None:
        raise InfeasibleTarget(config.lambda_target, impl.min_lambda(table.rows, table.counts, config.mutual_links))
    rates = [table.rates[i][c] for i, c in enumerate(best)]
    return make_assignment(channels, rates, config.model_bits, config.mutual_links, tuple(best))


def assignment_report(assignment: RateAssignment) -> list[dict]:
    """One record per node: rate, reached nodes, plus the shared lambda and t_com."""
    out = []
    for i, r in enumerate(assignment.rates):
        out.append(
            {
                "node": i,
                "rate_bps": r,
                "reached": assignment.topology.reached(i),
                "lambda": assignment.lam,
                "t_com_s": assignment.t_com,
            }
        )
    return out
