"""Paths of the dependent series and checks of its maximal inequality.

A path is built from innovations ``Z`` as ``X_n = eps_n * sum_{k<=n} a[n,k] Z_k``
(optionally times a weight vector ``u_n``), with prefix sums ``S_n`` and the
running supremum of ``||S_n||``.  Expectations of that supremum are computed
either exactly, by enumerating all Rademacher outcomes, or by seeded Monte
Carlo over replica streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import as_innovation_array, check_positive_int
from .coeffs import levy_bound, tail_A, tail_B
from .innovations import (InnovationSpec, exact_innovation_chunks, replica_blocks,
                          run_replicas)

DEFAULT_REPLICAS = 100_000

# Relative slack for exact comparisons, absorbing float rounding only.
EXACT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class SeriesPath:
    """One realisation: terms ``X_n``, prefix sums ``S_n`` and ``max_{j<=n} ||S_j||``."""

    terms: np.ndarray
    prefix: np.ndarray
    running_sup: np.ndarray

    @property
    def horizon(self):
        return self.terms.shape[0]

    @property
    def norms(self):
        return _norm(self.prefix)

    @classmethod
    def from_terms(cls, terms):
        terms = np.asarray(terms)
        if terms.ndim == 1:
            terms = terms[:, None]
        prefix = np.cumsum(terms, axis=0)
        return cls(terms=terms, prefix=prefix, running_sup=np.maximum.accumulate(_norm(prefix)))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with standard error ``sd / sqrt(replicas)``."""

    mean: float
    std_error: float
    replicas: int
    seed: Optional[int] = None
    streams: tuple = ()

    @classmethod
    def from_samples(cls, samples, seed=None):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.size < 2:
            raise ValueError("need at least 2 replicas for a standard error")
        nblocks = len(replica_blocks(samples.size))
        return cls(mean=float(samples.mean()),
                   std_error=std_error(samples),
                   replicas=int(samples.size), seed=seed, streams=(0, nblocks - 1))

    @property
    def upper(self):
        return self.mean + 3.0 * self.std_error

    @property
    def lower(self):
        return self.mean - 3.0 * self.std_error


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of checking ``lhs <= rhs``.

    ``status`` is ``"pass"``, ``"fail"`` or, for Monte Carlo only,
    ``"inconclusive"`` (neither ``mean + 3 SE <= rhs`` nor ``mean - 3 SE > rhs``).
    """

    lhs: float
    rhs: float
    margin: float
    method: str
    status: str
    lhs_se: float = 0.0

    @property
    def passed(self):
        return self.status == "pass"


def std_error(samples):
    """``sd / sqrt(n)`` along the first axis; exactly 0 for constant samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] < 2 or np.all(samples == samples[0]):
        return 0.0
    return float(samples.std(ddof=1) / math.sqrt(samples.shape[0]))


def _norm(x):
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=-1))


def judge_exact(lhs, rhs, method="exact"):
    slack = EXACT_SLACK * max(1.0, abs(rhs))
    status = "pass" if lhs <= rhs + slack else "fail"
    return BoundCheck(lhs=lhs, rhs=rhs, margin=rhs - lhs, method=method, status=status)


def judge_mc(est, rhs, rhs_se=0.0, method="mc"):
    """Verdict for an estimated ``lhs`` against ``rhs`` at the 3-SE margin.

    ``rhs_se`` folds in the error of an estimated right-hand side.
    """
    se = math.hypot(est.std_error, rhs_se)
    if est.mean + 3.0 * se <= rhs:
        status = "pass"
    elif est.mean - 3.0 * se > rhs:
        status = "fail"
    else:
        status = "inconclusive"
    return BoundCheck(lhs=est.mean, rhs=rhs, margin=rhs - (est.mean + 3.0 * se),
                      method=method, status=status, lhs_se=est.std_error)


def _coefficient_block(M, N, signs=None):
    A = M.dense(N)
    if signs is not None:
        A = A * signs.as_array(N)[:, None]
    return A


def _weight_block(weights, N):
    return None if weights is None else weights.at(np.arange(1, N + 1))


def batch_terms(A, Z, U=None):
    """Terms ``X`` for a block of innovation paths.

    ``A`` is ``(N, N)``, ``Z`` is ``(R, N, d)``; with weight vectors ``U``
    (``(N, dw)``, requires ``d == 1``) the terms are ``X_n u_n``.
    """
    X = np.einsum("nk,rkd->rnd", A, Z)
    if U is not None:
        if X.shape[-1] != 1:
            raise ValueError("weights require scalar innovations (dim 1)")
        X = X * U[None, :, :]
    return X


def batch_prefix(A, Z, U=None):
    return np.cumsum(batch_terms(A, Z, U), axis=1)


def batch_sup(A, Z, U=None):
    """``max_n ||S_n||`` for every path in the block."""
    return _norm(batch_prefix(A, Z, U)).max(axis=1)


def build_path(M, Z, N, signs=None, weights=None):
    """Realise ``X_n = eps_n sum_{k<=n} a[n,k] Z_k`` (times ``u_n`` when weighted).

    Examples
    --------
    >>> from randseries.coeffs import CoefficientMatrix
    >>> M = CoefficientMatrix.from_table([[1, 0], [1, 1]])
    >>> build_path(M, [1.0, 1.0], 2).prefix.ravel().tolist()
    [1.0, 3.0]
    """
    N = check_positive_int(N, "N")
    Z = as_innovation_array(Z, N)[:N]
    if weights is not None and Z.shape[1] != 1:
        raise ValueError(
            f"weights need scalar innovations, got innovation dimension {Z.shape[1]}")
    A = _coefficient_block(M, N, signs)
    terms = batch_terms(A, Z[None], _weight_block(weights, N))[0]
    return SeriesPath.from_terms(terms)


def sup_samples(M, spec, N, replicas=DEFAULT_REPLICAS, seed=0, signs=None, weights=None,
                threads=1):
    """Per-replica ``max_{n<=N} ||S_n||``, in replica order."""
    N = check_positive_int(N, "N")
    A = _coefficient_block(M, N, signs)
    U = _weight_block(weights, N)
    if U is not None and spec.dim != 1:
        raise ValueError("weights need scalar innovations")
    return run_replicas(lambda Z: batch_sup(A, Z, U), spec, N, replicas, seed, threads)


def mc_expected_sup(M, spec, N, replicas=DEFAULT_REPLICAS, seed=0, signs=None,
                    weights=None, threads=1):
    """Monte Carlo estimate of ``E max_{n<=N} ||S_n||``."""
    samples = sup_samples(M, spec, N, replicas, seed, signs, weights, threads)
    return McEstimate.from_samples(samples, seed)


def exact_mean(fn, spec, N, cap=None):
    """``E fn(Z)`` over all ``2^N`` equiprobable Rademacher outcomes.

    ``fn`` maps an ``(R, N, d)`` outcome block to per-outcome values.
    """
    total = []
    count = 0
    for Z in exact_innovation_chunks(spec, N, cap):
        vals = np.asarray(fn(Z), dtype=np.float64)
        total.append(math.fsum(vals))
        count += vals.shape[0]
    return math.fsum(total) / count


def exact_expected_sup(M, N, signs=None, weights=None, spec=None, cap=None):
    """Exact ``E max_{n<=N} ||S_n||`` under Rademacher innovations, by enumeration.

    >>> from randseries.coeffs import CoefficientMatrix
    >>> exact_expected_sup(CoefficientMatrix.from_table([[1, 0], [1, 1]]), 2)
    2.0
    """
    N = check_positive_int(N, "N")
    A = _coefficient_block(M, N, signs)
    U = _weight_block(weights, N)
    return exact_mean(lambda Z: batch_sup(A, Z, U), spec, N, cap)


def verify_levy(M, spec=None, N=1, exact=False, replicas=DEFAULT_REPLICAS, seed=0,
                signs=None, weights=None, threads=1, cap=None):
    """Check ``E max_{n<=N} ||S_n|| <= levy_bound(M, N)``.

    In exact mode (Rademacher, enumeration) the check is a plain comparison;
    in Monte Carlo mode it passes when ``mean + 3 SE <= rhs``.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    rhs = levy_bound(M, N, weights)
    if exact:
        lhs = exact_expected_sup(M, N, signs, weights, spec, cap)
        return judge_exact(lhs, rhs)
    est = mc_expected_sup(M, spec, N, replicas, seed, signs, weights, threads)
    return judge_mc(est, rhs)


def prefix_decomposition(M, Z, N):
    """Split ``(S_1, ..., S_N)`` into one sequence per diagonal.

    Component ``n`` (row ``n-1`` of the result) has ``n-1`` leading zeros and
    then the partial sums ``a[n,1]Z_1 + a[n+1,2]Z_2 + ... + a[j,j-n+1]Z_{j-n+1}``
    for ``j = n..N``.  Returns an ``(N, N, d)`` array whose sum over the first
    axis is the prefix-sum sequence.
    """
    N = check_positive_int(N, "N")
    Z = as_innovation_array(Z, N)[:N]
    A = M.dense(N)
    out = np.zeros((N, N, Z.shape[1]), dtype=np.result_type(A, Z))
    for n in range(1, N + 1):
        diag = np.diagonal(A, offset=-(n - 1))
        out[n - 1, n - 1:] = np.cumsum(diag[:, None] * Z[:N - n + 1], axis=0)
    return out


def batch_tail_sup(A, Z, start, U=None):
    """``max_{1<=l<=m} ||S_{start+l} - S_start||`` for each path in the block."""
    X = batch_terms(A, Z, U)[:, start:]
    return _norm(np.cumsum(X, axis=1)).max(axis=1)


def tail_sup_estimate(M, spec, N, m, replicas=DEFAULT_REPLICAS, seed=0, threads=1,
                      weights=None):
    """Monte Carlo estimate of ``E max_{1<=l<=m} ||X_{N+1} + ... + X_{N+l}||``."""
    N = check_positive_int(N, "N", minimum=0)
    m = check_positive_int(m, "m")
    A = M.dense(N + m)
    U = _weight_block(weights, N + m)
    samples = run_replicas(lambda Z: batch_tail_sup(A, Z, N, U), spec, N + m,
                           replicas, seed, threads)
    return McEstimate.from_samples(samples, seed)


def exact_tail_sup(M, N, m, spec=None, weights=None, cap=None):
    """Exact tail supremum expectation over all Rademacher outcomes of ``Z_1..Z_{N+m}``."""
    N = check_positive_int(N, "N", minimum=0)
    m = check_positive_int(m, "m")
    A = M.dense(N + m)
    U = _weight_block(weights, N + m)
    return exact_mean(lambda Z: batch_tail_sup(A, Z, N, U), spec, N + m, cap)


def verify_tail(M, spec=None, N=1, m=1, K=None, exact=False, replicas=DEFAULT_REPLICAS,
                seed=0, threads=1, weights=None, cap=None):
    """Check the tail supremum against ``2 (A_N + B_N)``.

    ``K`` defaults to ``N + m`` so that the truncated tail quantities cover
    every coefficient the finite horizon touches.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    K = N + m if K is None else K
    rhs = 2.0 * (tail_A(M, N, K, weights) + tail_B(M, N, K, weights))
    if exact:
        return judge_exact(exact_tail_sup(M, N, m, spec, weights, cap), rhs)
    return judge_mc(tail_sup_estimate(M, spec, N, m, replicas, seed, threads, weights), rhs)
