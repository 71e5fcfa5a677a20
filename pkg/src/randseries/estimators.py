"""Estimator-style wrappers around the factorization and the diagonal criterion.

They follow the usual ``fit`` / ``transform`` / ``get_params`` conventions so
they compose with pipelines, but the underlying objects stay available as
fitted attributes.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_lower_triangular
from .coeffs import CoefficientMatrix, diagonal_profile, levy_bound, tail_report
from .covfactor import PIVOT_TOL, CovarianceSpec, cholesky_lower, verify_factorization
from .innovations import SignPattern


class TriangularFactorizer(TransformerMixin, BaseEstimator):
    """Factor a covariance ``R = L L^T`` and colour white noise with ``L``.

    Parameters
    ----------
    pivot_tol : float, default=1e-12
        Relative pivot tolerance; smaller pivots raise ``FactorizationError``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_features)
        Lower-triangular factor ``L``.
    matrix_ : CoefficientMatrix
    max_deviation_ : float
        ``max |L L^T - R|``.
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> f = TriangularFactorizer().fit(np.array([[4.0, 2.0], [2.0, 2.0]]))
    >>> f.coef_.tolist()
    [[2.0, 0.0], [1.0, 1.0]]
    >>> f.transform(np.array([[1.0, 1.0]])).tolist()
    [[2.0, 2.0]]
    """

    def __init__(self, pivot_tol=PIVOT_TOL):
        self.pivot_tol = pivot_tol

    def fit(self, X, y=None):
        R = check_array(X, dtype=np.float64)
        spec = CovarianceSpec.explicit(R)
        self.matrix_ = cholesky_lower(spec, self.pivot_tol)
        self.coef_ = np.array(self.matrix_.table)
        self.max_deviation_ = verify_factorization(self.matrix_, spec).max_deviation
        self.n_features_in_ = R.shape[0]
        return self

    def transform(self, X):
        """Rows of white noise ``Z`` to correlated rows ``L Z``."""
        check_is_fitted(self, "coef_")
        Z = check_array(X, dtype=np.float64)
        self._check_width(Z)
        return Z @ self.coef_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "coef_")
        Y = check_array(X, dtype=np.float64)
        self._check_width(Y)
        return solve_triangular(self.coef_, Y.T, lower=True).T

    def _check_width(self, Z):
        if Z.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {Z.shape[1]} features, factor expects {self.n_features_in_}")


class PartialSumTransformer(TransformerMixin, BaseEstimator):
    """Map innovation rows ``(Z_1..Z_N)`` to partial sums ``(S_1..S_N)``.

    Parameters
    ----------
    coef : CoefficientMatrix or array-like, optional
        Lower-triangular coefficients; the identity when omitted, so the
        output is the plain cumulative sum.
    signs : sequence of {-1, +1}, optional
        Deterministic multipliers ``eps_n`` of the terms.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_features)
        The materialised (signed) coefficient block.
    """

    def __init__(self, coef=None, signs=None):
        self.coef = coef
        self.signs = signs

    def fit(self, X, y=None):
        Z = check_array(X, dtype=None)
        N = Z.shape[1]
        if self.coef is None:
            A = np.eye(N)
        elif isinstance(self.coef, CoefficientMatrix):
            A = self.coef.dense(N)
        else:
            A = check_lower_triangular(self.coef, "coef")
            if A.shape[0] < N:
                raise ValueError(f"coef is {A.shape[0]}x{A.shape[0]}, X has {N} features")
            A = A[:N, :N]
        if self.signs is not None:
            A = A * SignPattern(tuple(self.signs)).as_array(N)[:, None]
        self.coef_ = A
        self.n_features_in_ = N
        return self

    def transform(self, X):
        check_is_fitted(self, "coef_")
        Z = check_array(X, dtype=None)
        if Z.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {Z.shape[1]} features, expected {self.n_features_in_}")
        return np.cumsum(Z @ self.coef_.T, axis=1)


class DiagonalCriterion(BaseEstimator):
    """Diagonal ℓ² criterion of a coefficient table, as a fit-only estimator.

    Parameters
    ----------
    N : int, optional
        Number of diagonals; defaults to the table size.
    K : int, optional
        Inner cutoff; defaults to ``N``.
    weights : VectorWeights, optional
    tail_policy : {"none", "geometric", "analytic"}, default="geometric"
    rtol : float, default=1e-8

    Attributes
    ----------
    profile_ : DiagonalProfile
    criterion_ : float
    converged_ : bool or None
    levy_bound_ : float
        Bound on ``E max_n ||S_n||`` over the table's horizon.
    tail_ : TailReport
        ``A_N`` and ``B_N`` at half the horizon.
    """

    def __init__(self, N=None, K=None, weights=None, tail_policy="geometric", rtol=1e-8):
        self.N = N
        self.K = K
        self.weights = weights
        self.tail_policy = tail_policy
        self.rtol = rtol

    def fit(self, X, y=None):
        M = X if isinstance(X, CoefficientMatrix) else CoefficientMatrix.from_table(X)
        if self.N is None and M.table is None:
            raise ValueError("rule-backed matrices need an explicit N")
        N = M.n_max if self.N is None else self.N
        K = N if self.K is None else self.K
        self.matrix_ = M
        self.profile_ = diagonal_profile(M, N, K, self.weights, self.tail_policy, self.rtol)
        self.criterion_ = self.profile_.value
        self.converged_ = self.profile_.converged
        self.levy_bound_ = levy_bound(M, N, self.weights)
        self.tail_ = tail_report(M, max(N // 2, 1), K, self.weights)
        self.n_features_in_ = N
        return self
