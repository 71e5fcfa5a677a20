"""First-crossing stopping times, flipped series and moment diagnostics.

For a level ``r`` the stopping time ``tau_r`` is the first ``n`` with
``||S_n|| > r`` (infinite when no prefix crosses).  The associated signs are
``zeta_n = +1`` for ``n <= tau_r`` and ``-1`` afterwards, and
``T_n = zeta_1 X_1 + ... + zeta_n X_n``.  On ``{tau_r = n}`` one has
``S_N + T_N = 2 S_n``, which yields
``P(max ||S_n|| > r) <= P(||S_N|| > r) + P(||T_N|| > r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._validation import check_positive_int
from .innovations import InnovationSpec, exact_innovation_chunks, run_replicas
from .simulate import (DEFAULT_REPLICAS, McEstimate, _norm, batch_prefix, exact_mean,
                       std_error)


@dataclass(frozen=True, eq=False)
class StoppingRecord:
    level: float
    tau: Union[int, float]
    zeta: np.ndarray
    flipped: np.ndarray

    @property
    def crossed(self):
        return not math.isinf(self.tau)


def first_crossing(path, r):
    """Stopping record of ``path`` at level ``r`` (strict crossing ``||S_n|| > r``)."""
    if not r > 0:
        raise ValueError(f"level must be positive, got {r}")
    norms = path.norms
    above = np.flatnonzero(norms > r)
    tau = int(above[0]) + 1 if above.size else math.inf
    n = np.arange(1, path.horizon + 1)
    zeta = np.where(n <= tau, 1, -1)
    flipped = np.cumsum(zeta[:, None] * path.terms, axis=0)
    return StoppingRecord(level=float(r), tau=tau, zeta=zeta, flipped=flipped)


def batch_crossing(S, r):
    """Vectorised crossing data for prefix sums ``S`` of shape ``(R, N, d)``.

    Returns ``(tau, T_N)`` where ``tau`` is 1-based with ``N + 1`` standing for
    "no crossing", and ``T_N = 2 S_tau - S_N`` on crossing paths, ``S_N`` otherwise.
    """
    R, N, _ = S.shape
    above = _norm(S) > r
    crossed = above.any(axis=1)
    first = np.where(crossed, above.argmax(axis=1), N)
    S_N = S[:, -1, :]
    S_tau = S[np.arange(R), np.minimum(first, N - 1), :]
    T_N = np.where(crossed[:, None], 2.0 * S_tau - S_N, S_N)
    return first + 1, T_N


@dataclass(frozen=True)
class StoppingCheck:
    """The three probabilities at one level and the verdict.

    In exact mode the probabilities are ``count / total`` and the comparison is
    done on the integer counts.
    """

    level: float
    p_sup: float
    p_final: float
    p_flipped: float
    method: str
    status: str
    se_sup: float = 0.0
    se_rhs: float = 0.0
    counts: tuple = ()

    @property
    def margin(self):
        return self.p_final + self.p_flipped - self.p_sup


def _events(A, Z, r):
    S = batch_prefix(A, Z)
    _, T_N = batch_crossing(S, r)
    return np.stack([_norm(S).max(axis=1) > r, _norm(S[:, -1]) > r, _norm(T_N) > r], axis=1)


def verify_stopping_inequality(M, spec=None, N=1, r_grid=(1.0,), exact=True,
                               replicas=DEFAULT_REPLICAS, seed=0, threads=1, cap=None):
    """Check ``P(max ||S_n|| > r) <= P(||S_N|| > r) + P(||T_N|| > r)`` per level.

    Monte Carlo mode fails a level only when ``lhs - 3 SE > rhs``; otherwise
    it passes when ``lhs + 3 SE <= rhs`` and is inconclusive in between.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    N = check_positive_int(N, "N")
    levels = [float(r) for r in r_grid]
    if any(not r > 0 for r in levels):
        raise ValueError("every level must be positive")
    A = M.dense(N)
    out = []
    if exact:
        counts = np.zeros((len(levels), 3), dtype=np.int64)
        total = 0
        for Z in exact_innovation_chunks(spec, N, cap):
            for i, r in enumerate(levels):
                counts[i] += _events(A, Z, r).sum(axis=0)
            total += Z.shape[0]
        for r, (c_sup, c_fin, c_flip) in zip(levels, counts.tolist()):
            status = "pass" if c_sup <= c_fin + c_flip else "fail"
            out.append(StoppingCheck(r, c_sup / total, c_fin / total, c_flip / total,
                                     "exact", status, counts=(c_sup, c_fin, c_flip, total)))
        return out

    def per_block(Z):
        return np.concatenate([_events(A, Z, r) for r in levels], axis=1).astype(np.float64)

    ev = run_replicas(per_block, spec, N, replicas, seed, threads).reshape(replicas, len(levels), 3)
    for i, r in enumerate(levels):
        sup = McEstimate.from_samples(ev[:, i, 0], seed)
        rhs = McEstimate.from_samples(ev[:, i, 1] + ev[:, i, 2], seed)
        diff = McEstimate.from_samples(ev[:, i, 0] - ev[:, i, 1] - ev[:, i, 2], seed)
        if diff.upper <= 0:
            status = "pass"
        elif diff.lower > 0:
            status = "fail"
        else:
            status = "inconclusive"
        out.append(StoppingCheck(r, sup.mean, float(ev[:, i, 1].mean()),
                                 float(ev[:, i, 2].mean()), "mc", status,
                                 se_sup=sup.std_error, se_rhs=rhs.std_error))
    return out


def final_values(M, N, r, spec=None, cap=None):
    """``S_N`` and ``T_N`` on every enumerated Rademacher outcome, as ``(2^N, d)`` arrays."""
    A = M.dense(N)
    finals, flips = [], []
    for Z in exact_innovation_chunks(spec, N, cap):
        S = batch_prefix(A, Z)
        _, T_N = batch_crossing(S, r)
        finals.append(S[:, -1, :])
        flips.append(T_N)
    return np.concatenate(finals), np.concatenate(flips)


@dataclass(frozen=True)
class MomentRatio:
    """``E||D||^4 / (E||D||^2)^2`` for a segment sum ``D = S_{m+j} - S_m``."""

    m: int
    j: int
    fourth: float
    second: float
    ratio: float
    std_error: float
    method: str


def _segment(A, Z, m, j):
    X = np.einsum("nk,rkd->rnd", A, Z)
    return _norm(X[:, m:m + j].sum(axis=1))


def fourth_moment_ratio(M, spec=None, m=0, j=1, exact=False, replicas=DEFAULT_REPLICAS,
                        seed=0, threads=1, cap=None):
    """Fourth-to-squared-second moment ratio of the segment ``X_{m+1} + ... + X_{m+j}``.

    The Monte Carlo standard error is propagated through the ratio by the
    delta method.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    m = check_positive_int(m, "m", minimum=0)
    j = check_positive_int(j, "j")
    N = m + j
    A = M.dense(N)
    if exact:
        fourth = exact_mean(lambda Z: _segment(A, Z, m, j) ** 4, spec, N, cap)
        second = exact_mean(lambda Z: _segment(A, Z, m, j) ** 2, spec, N, cap)
        ratio = fourth / second**2 if second > 0 else math.nan
        return MomentRatio(m, j, fourth, second, ratio, 0.0, "exact")
    sq = run_replicas(lambda Z: _segment(A, Z, m, j) ** 2, spec, N, replicas, seed, threads)
    fourth, second = float(np.mean(sq**2)), float(np.mean(sq))
    if second == 0:
        return MomentRatio(m, j, fourth, second, math.nan, 0.0, "mc")
    ratio = fourth / second**2
    linear = sq**2 / second**2 - 2.0 * fourth * sq / second**3
    se = std_error(linear)
    return MomentRatio(m, j, fourth, second, ratio, se, "mc")


def max_fourth_moment_ratio(M, spec=None, segments=((0, 1),), **kwargs):
    """Scan segments and return ``(K_required, per-segment results)``.

    ``K_required`` is the largest observed ratio: the smallest constant the
    fourth-moment condition could hold with on the scanned segments.
    """
    results = [fourth_moment_ratio(M, spec, m, j, **kwargs) for m, j in segments]
    finite = [r.ratio for r in results if not math.isnan(r.ratio)]
    return (max(finite) if finite else math.nan), results


def l2_cauchy_exact(M, m, J):
    """``E||S_{m+j} - S_m||^2`` for ``j = 1..J`` by orthogonality of the innovations.

    Valid for any independent unit-variance innovations:
    ``E||sum_i X_i||^2 = sum_k |sum_i a[i,k]|^2``.
    """
    A = M.dense(m + J)
    cols = np.cumsum(A[m:], axis=0)
    return np.sum(np.abs(cols) ** 2, axis=1)


@dataclass(frozen=True)
class CauchyRow:
    m: int
    sup_second_moment: float
    argmax_j: int
    std_error: float


def l2_cauchy_profile(M, spec, m_grid, J, replicas=DEFAULT_REPLICAS, seed=0, threads=1):
    """Monte Carlo ``sup_{j<=J} E||S_{m+j} - S_m||^2`` for each ``m`` in the grid.

    The standard error reported is that of the maximising ``j``.
    """
    J = check_positive_int(J, "J")
    rows = []
    for m in m_grid:
        m = check_positive_int(m, "m", minimum=0)
        A = M.dense(m + J)

        def per_block(Z):
            X = np.einsum("nk,rkd->rnd", A, Z)[:, m:]
            return _norm(np.cumsum(X, axis=1)) ** 2

        sq = run_replicas(per_block, spec, m + J, replicas, seed, threads)
        means = sq.mean(axis=0)
        best = int(np.argmax(means))
        se = std_error(sq[:, best])
        rows.append(CauchyRow(m, float(means[best]), best + 1, se))
    return rows

