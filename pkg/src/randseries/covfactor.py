"""Coefficient matrices from covariance structures.

A stationary or general Gaussian sequence with covariance ``R`` is the series
``Delta_n = sum_{k<=n} alpha[n,k] Z_k`` for any lower-triangular ``alpha`` with
``alpha alpha^T = R``.  The factor is unique up to column signs; here the
diagonal is kept nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import check_positive_int, check_symmetric_matrix
from .coeffs import CoefficientMatrix

PIVOT_TOL = 1e-12


class FactorizationError(ValueError):
    """The covariance is not numerically positive definite."""

    def __init__(self, pivot, value, threshold):
        self.pivot = pivot
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"non-positive pivot at index {pivot}: {value:.6g} < {threshold:.3g}")


def _abs_pow(x, p):
    # |0|^p is 0 for every p, including p = 0
    x = np.abs(np.asarray(x, dtype=np.float64))
    with np.errstate(divide="ignore"):
        return np.where(x == 0, 0.0, x ** p)


def _check_hurst(H):
    if not 0 <= H < 1:
        raise ValueError(f"Hurst index must lie in [0, 1), got {H}")


def fgn_covariance(H, n, m):
    """Fractional Gaussian noise kernel ``E(Delta_n Delta_m)``.

    ``0.5|k+1|^{2H} + 0.5|k-1|^{2H} - |k|^{2H}`` with ``k = n - m`` and the
    convention ``|0|^{2H} = 0`` (also at ``H = 0``).

    >>> float(fgn_covariance(0.0, 3, 2))
    -0.5
    """
    _check_hurst(H)
    k = np.asarray(n) - np.asarray(m)
    p = 2.0 * H
    return 0.5 * _abs_pow(k + 1, p) + 0.5 * _abs_pow(k - 1, p) - _abs_pow(k, p)


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Explicit symmetric matrix or fGN kernel with Hurst index ``hurst``."""

    size: int
    matrix: Optional[np.ndarray] = None
    hurst: Optional[float] = None

    def __post_init__(self):
        check_positive_int(self.size, "size")
        if (self.matrix is None) == (self.hurst is None):
            raise ValueError("exactly one of matrix or hurst must be given")
        if self.matrix is not None:
            R = check_symmetric_matrix(self.matrix)
            if R.shape[0] != self.size:
                raise ValueError(f"matrix is {R.shape[0]}x{R.shape[0]}, size is {self.size}")
            R.setflags(write=False)
            object.__setattr__(self, "matrix", R)
        else:
            _check_hurst(self.hurst)

    @classmethod
    def fgn(cls, H, N):
        return cls(size=N, hurst=float(H))

    @classmethod
    def explicit(cls, R):
        R = np.asarray(R, dtype=np.float64)
        return cls(size=R.shape[0], matrix=R)

    def dense(self):
        if self.matrix is not None:
            return np.array(self.matrix)
        idx = np.arange(1, self.size + 1)
        return fgn_covariance(self.hurst, idx[:, None], idx[None, :])


def cholesky_factor(R, pivot_tol=PIVOT_TOL):
    """Lower-triangular ``L`` with ``L L^T = R`` and nonnegative diagonal.

    Pivots below ``pivot_tol`` times the largest diagonal entry of ``R`` raise
    :class:`FactorizationError` naming the 1-based pivot index.
    """
    R = check_symmetric_matrix(R, atol=1e-12 * max(1.0, float(np.abs(R).max(initial=0))))
    N = R.shape[0]
    threshold = pivot_tol * max(float(np.max(np.diag(R), initial=0.0)), np.finfo(float).tiny)
    L = np.zeros_like(R)
    for j in range(N):
        pivot = R[j, j] - L[j, :j] @ L[j, :j]
        if pivot < threshold:
            raise FactorizationError(j + 1, float(pivot), threshold)
        L[j, j] = math.sqrt(pivot)
        if j + 1 < N:
            L[j + 1:, j] = (R[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_lower(spec, pivot_tol=PIVOT_TOL):
    """Factor a covariance spec into a table-backed :class:`CoefficientMatrix`."""
    L = cholesky_factor(spec.dense(), pivot_tol)
    name = f"chol:fgn:H={spec.hurst:g}" if spec.hurst is not None else "chol"
    return CoefficientMatrix.from_table(L, name=name)


def fgn0_coefficients(N=None):
    """Explicit index-0 fGN model with bandwidth 1.

    ``a[n,n-1] = -sqrt((n-1)/(2n))`` and ``a[n,n] = sqrt((n+1)/(2n))``; row 1 is
    ``(1)``.  Rule-backed, so ``N`` only sets the truncation order.
    """
    if N is not None:
        N = check_positive_int(N, "N")

    def rule(n, k):
        n = n.astype(np.float64)
        return np.where(n == k, np.sqrt((n + 1) / (2 * n)), -np.sqrt((n - 1) / (2 * n)))

    return CoefficientMatrix.from_rule(rule, support="banded", bandwidth=1,
                                       n_max=N, name="fgn0")


def normalize_column_signs(L):
    """Flip columns so every diagonal entry is nonnegative."""
    L = np.array(L, dtype=np.float64)
    signs = np.where(np.diag(L) < 0, -1.0, 1.0)
    return L * signs[None, :]


@dataclass(frozen=True)
class FactorizationReport:
    max_deviation: float
    location: tuple
    tol: float

    @property
    def passed(self):
        return self.max_deviation <= self.tol


def verify_factorization(M, spec, tol=1e-10):
    """Max elementwise deviation of ``M M^T`` from the covariance."""
    R = spec.dense()
    A = M.dense(spec.size)
    dev = np.abs(A @ A.conj().T - R)
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    return FactorizationReport(max_deviation=float(dev[i, j]), location=(i + 1, j + 1), tol=tol)
