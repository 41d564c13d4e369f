# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rate search. Same contract as ``_search_py``.

Spectral checks call LAPACK dgeev through scipy's Cython bindings so the
eigenvalues match ``scipy.linalg.eigvals`` used by the fallback.
"""
from libc.math cimport INFINITY, hypot
from scipy.linalg.cython_lapack cimport dgeev

import numpy as np

from .consensus import SpectralError, PERRON_TOL

cdef double PRUNE_SLACK = 1e-12


cdef class _Kernel:
    cdef int n
    cdef bint mutual
    cdef const unsigned char[:, :, ::1] rows
    cdef double[::1] a, a_copy, wr, wi, work
    cdef int lwork
    cdef int[::1] idx

    def __init__(self, rows, bint mutual):
        self.rows = rows
        self.n = rows.shape[0]
        self.mutual = mutual
        n = self.n
        self.a = np.zeros(n * n)
        self.a_copy = np.zeros(n * n)
        self.wr = np.zeros(n)
        self.wi = np.zeros(n)
        self.lwork = max(64 * n, 16)
        self.work = np.zeros(self.lwork)
        self.idx = np.zeros(n, dtype=np.int32)

    cdef double lam(self) except -1.0:
        cdef int n = self.n, i, j, k, info = 0, one = 1
        cdef double deg, best, d, dk, m
        cdef double dummy = 0.0
        cdef char jobvl = b'N', jobvr = b'N'
        cdef unsigned char aij
        for i in range(n):
            deg = 0.0
            for j in range(n):
                aij = self.rows[i, self.idx[i], j]
                if self.mutual:
                    aij = aij & self.rows[j, self.idx[j], i]
                self.a[i + j * n] = aij
                deg += aij
            for j in range(n):
                self.a[i + j * n] /= deg
        for k in range(n * n):
            self.a_copy[k] = self.a[k]
        dgeev(&jobvl, &jobvr, &n, &self.a_copy[0], &n, &self.wr[0], &self.wi[0],
              &dummy, &one, &dummy, &one, &self.work[0], &self.lwork, &info)
        if info != 0:
            raise SpectralError(f"dgeev failed with info={info}", self._dense())
        k = 0
        dk = INFINITY
        for i in range(n):
            d = hypot(self.wr[i] - 1.0, self.wi[i])
            if d < dk:
                dk = d
                k = i
        if not dk <= PERRON_TOL:
            raise SpectralError("no eigenvalue within tolerance of 1; matrix is not row-stochastic", self._dense())
        best = 0.0
        for i in range(n):
            if i != k:
                m = hypot(self.wr[i], self.wi[i])
                if m > best:
                    best = m
        return best

    def _dense(self):
        return np.asarray(self.a).reshape(self.n, self.n).T.copy()

    def lam_at(self, idx):
        for i in range(self.n):
            self.idx[i] = idx[i]
        return self.lam()


cdef class _Search(_Kernel):
    cdef const double[:, ::1] inv
    cdef const int[::1] counts
    cdef double[::1] suffix
    cdef int[::1] seed, best
    cdef double best_s, best_lam, limit
    cdef bint from_seed, found
    cdef long evals

    def __init__(self, inv, rows, counts, bint mutual, double limit):
        _Kernel.__init__(self, rows, mutual)
        self.inv = inv
        self.counts = counts
        n = self.n
        self.suffix = np.zeros(n + 1)
        for i in range(n - 1, -1, -1):
            self.suffix[i] = self.suffix[i + 1] + inv[i, 0]
        self.seed = np.asarray(counts, dtype=np.int32) - 1
        self.best = np.zeros(n, dtype=np.int32)
        self.best_s = INFINITY
        self.best_lam = np.nan
        self.limit = limit
        self.from_seed = False
        self.found = False
        self.evals = 0

    cdef bint _is_seed(self):
        cdef int i
        for i in range(self.n):
            if self.idx[i] != self.seed[i]:
                return False
        return True

    cdef int _accept(self, double s, double lam):
        cdef int i
        for i in range(self.n):
            self.best[i] = self.idx[i]
        self.best_s = s
        self.best_lam = lam
        self.found = True
        return 0

    cdef int leaf(self, double s) except -1:
        cdef double lam
        if s < self.best_s or (s == self.best_s and self.from_seed and not self._is_seed()):
            self.evals += 1
            lam = self.lam()
            if lam <= self.limit:
                self._accept(s, lam)
                self.from_seed = False
        return 0

    cdef int rec(self, int i, double partial) except -1:
        cdef int c
        cdef double p
        cdef double rest = self.suffix[i + 1]
        cdef bint last = i == self.n - 1
        for c in range(self.counts[i]):
            p = partial + self.inv[i, c]
            if p + rest > self.best_s * (1.0 + PRUNE_SLACK):
                break
            self.idx[i] = c
            if last:
                self.leaf(p)
            else:
                self.rec(i + 1, p)
        return 0

    def run(self):
        cdef int i
        cdef double s = 0.0, lam
        for i in range(self.n):
            self.idx[i] = self.seed[i]
            s += self.inv[i, self.seed[i]]
        self.evals = 1
        lam = self.lam()
        if lam <= self.limit:
            self._accept(s, lam)
            self.from_seed = True
        self.rec(0, 0.0)
        if not self.found:
            return None, self.best_s, self.best_lam, self.evals
        return tuple(int(v) for v in self.best), self.best_s, self.best_lam, self.evals


def search(inv_rates, rows, counts, double lambda_target, bint mutual, double tol=1e-9):
    inv_rates = np.ascontiguousarray(inv_rates, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    counts = np.ascontiguousarray(counts, dtype=np.int32)
    return _Search(inv_rates, rows, counts, mutual, lambda_target + tol).run()


def min_lambda(rows, counts, bint mutual):
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    cdef int[::1] cnt = np.ascontiguousarray(counts, dtype=np.int32)
    cdef _Kernel k = _Kernel(rows, mutual)
    cdef int n = k.n, i
    cdef double best = INFINITY, lam
    for i in range(n):
        k.idx[i] = 0
    while True:
        lam = k.lam()
        if lam < best:
            best = lam
        i = n - 1
        while i >= 0:
            k.idx[i] += 1
            if k.idx[i] < cnt[i]:
                break
            k.idx[i] = 0
            i -= 1
        if i < 0:
            return best
