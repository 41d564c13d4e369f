"""Connectivity, gossip averaging matrices and the spectral density parameter."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .propagation import ChannelMatrix

PERRON_TOL = 1e-8


class ContractError(ValueError):
    pass


class SpectralError(ArithmeticError):
    """Eigen-decomposition failed or produced no Perron eigenvalue."""

    def __init__(self, message: str, matrix: np.ndarray):
        super().__init__(f"{message}\nmatrix=\n{np.array2string(matrix, precision=17)}")
        self.matrix = matrix


@dataclass(frozen=True, eq=False)
class Connectivity:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=np.uint8)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError(f"adjacency must be square, got {a.shape}")
        if np.any(a > 1):
            raise ContractError("adjacency entries must be 0 or 1")
        np.fill_diagonal(a, 1)
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def symmetrized(self) -> "Connectivity":
        """Keep only mutual links."""
        return Connectivity(self.adjacency & self.adjacency.T)

    def reached(self, i: int) -> list[int]:
        return [j for j in range(self.n) if j != i and self.adjacency[i, j]]

    def __eq__(self, other):
        return isinstance(other, Connectivity) and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())


@dataclass(frozen=True, eq=False)
class AveragingMatrix:
    w: np.ndarray
    lam: float

    @property
    def n(self) -> int:
        return self.w.shape[0]


def connectivity_from_rates(channels: ChannelMatrix, rates: Sequence[float], mutual_links: bool = False) -> Connectivity:
    """Node i reaches j iff the effective capacity i->j is at least R_i."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (channels.n,):
        raise ContractError(f"expected {channels.n} rates, got shape {rates.shape}")
    if np.any(~(rates > 0)):
        raise ContractError("rates must be positive")
    a = (channels.effective >= rates[:, None]).astype(np.uint8)
    conn = Connectivity(a)
    return conn.symmetrized() if mutual_links else conn


def averaging_weights(conn: Connectivity) -> np.ndarray:
    a = conn.adjacency.astype(float)
    return a / a.sum(axis=1, keepdims=True)


def spectral_lambda(w: "np.ndarray | AveragingMatrix") -> float:
    """Largest eigenvalue magnitude after removing one Perron eigenvalue 1.

    Works for non-symmetric ``w``; eigenvalues may be complex.
    """
    if isinstance(w, AveragingMatrix):
        w = w.w
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    try:
        eig = scipy.linalg.eigvals(w, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}", w) from exc
    # hypot on the parts, not complex abs: numpy's vectorized complex abs can
    # differ from libm hypot by an ulp, and the compiled kernel uses hypot
    dist = np.hypot(eig.real - 1.0, eig.imag)
    k = int(np.argmin(dist))
    if not dist[k] <= PERRON_TOL:
        raise SpectralError("no eigenvalue within tolerance of 1; matrix is not row-stochastic", w)
    if n == 1:
        return 0.0
    rest = np.delete(np.hypot(eig.real, eig.imag), k)
    return float(rest.max())


def averaging_matrix(conn: Connectivity) -> AveragingMatrix:
    w = averaging_weights(conn)
    w.setflags(write=False)
    return AveragingMatrix(w, spectral_lambda(w))


def complete(n: int) -> Connectivity:
    return Connectivity(np.ones((n, n), dtype=np.uint8))


def ring(n: int) -> Connectivity:
    a = np.eye(n, dtype=np.uint8)
    for i in range(n):
        a[i, (i + 1) % n] = a[i, (i - 1) % n] = 1
    return Connectivity(a)
