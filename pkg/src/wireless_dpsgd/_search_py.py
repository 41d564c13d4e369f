"""Pure-Python rate search; reference for the Cython kernel.

Both backends take the same packed candidate table:

inv_rates : (n, kmax) float64, ``1 / R`` per candidate, ascending per row
rows      : (n, kmax, n) uint8, adjacency row induced by each candidate
counts    : (n,) int32, number of valid candidates per node
"""
from __future__ import annotations

import math

import numpy as np

from .consensus import spectral_lambda

# Prune only when the bound clears the incumbent by more than rounding noise,
# so pruning never drops a tuple brute force would pick.
PRUNE_SLACK = 1e-12


def _lambda_of(rows: np.ndarray, idx, mutual: bool) -> float:
    n = rows.shape[0]
    a = rows[np.arange(n), list(idx)]
    if mutual:
        a = a & a.T
    a = a.astype(float)
    return spectral_lambda(a / a.sum(axis=1, keepdims=True))


def search(inv_rates, rows, counts, lambda_target: float, mutual: bool, tol: float = 1e-9):
    """Return ``(index_tuple, inv_sum, lam, evaluated)``; ``index_tuple`` is None if infeasible."""
    inv_rates = np.asarray(inv_rates, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.uint8)
    counts = [int(c) for c in counts]
    n = len(counts)
    limit = lambda_target + tol

    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + float(inv_rates[i, 0])

    inv = [[float(inv_rates[i, c]) for c in range(counts[i])] for i in range(n)]
    seed = tuple(c - 1 for c in counts)
    state = {"best": None, "s": math.inf, "lam": math.nan, "from_seed": False, "evals": 1}

    s_seed = 0.0
    for i in range(n):
        s_seed += inv[i][seed[i]]
    lam = _lambda_of(rows, seed, mutual)
    if lam <= limit:
        state.update(best=seed, s=s_seed, lam=lam, from_seed=True)

    idx = [0] * n

    def leaf(s: float) -> None:
        best_s = state["s"]
        if s < best_s or (s == best_s and state["from_seed"] and tuple(idx) != seed):
            state["evals"] += 1
            lam = _lambda_of(rows, idx, mutual)
            if lam <= limit:
                state.update(best=tuple(idx), s=s, lam=lam, from_seed=False)

    def rec(i: int, partial: float) -> None:
        row = inv[i]
        rest = suffix[i + 1]
        last = i == n - 1
        for c in range(counts[i]):
            p = partial + row[c]
            if p + rest > state["s"] * (1.0 + PRUNE_SLACK):
                break
            idx[i] = c
            if last:
                leaf(p)
            else:
                rec(i + 1, p)

    rec(0, 0.0)
    return state["best"], state["s"], state["lam"], state["evals"]


def min_lambda(rows, counts, mutual: bool) -> float:
    """Smallest lambda over every candidate tuple (no pruning)."""
    rows = np.asarray(rows, dtype=np.uint8)
    counts = [int(c) for c in counts]
    n = len(counts)
    best = math.inf
    idx = [0] * n
    while True:
        best = min(best, _lambda_of(rows, idx, mutual))
        i = n - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < counts[i]:
                break
            idx[i] = 0
            i -= 1
        if i < 0:
            return best
