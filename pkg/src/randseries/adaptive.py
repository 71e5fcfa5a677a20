"""Series whose coefficients are predictable functions of past innovations.

A :class:`PredictableRule` computes ``a[n, k]`` from the history
``Z_1..Z_{k-1}`` only.  It never sees ``Z_k`` or later: the history handed to
the rule is a read-only slice of exactly ``k - 1`` innovations, so reading the
contemporaneous draw fails with ``IndexError`` instead of silently peeking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._validation import check_positive_int
from .coeffs import UNBOUNDED, LAWS, CoefficientMatrix, levy_bound
from .innovations import (InnovationSpec, exact_innovation_chunks, replica_blocks,
                          run_replicas, sample_innovations)
from .simulate import (DEFAULT_REPLICAS, BoundCheck, McEstimate, SeriesPath, _norm,
                       batch_sup, exact_mean, judge_exact, judge_mc, std_error)

# Offset deriving the seed of the independent replicas that estimate E|a|^2.
_RHS_SEED_OFFSET = 0x9E3779B97F4A7C15


@dataclass(frozen=True, eq=False)
class PredictableRule:
    """Random coefficients ``a[n, k] = func(n, k, history)``.

    ``history`` has shape ``(R, k - 1, d)``: a batch of ``R`` realisations of
    ``Z_1..Z_{k-1}``.  ``func`` returns ``R`` values (or a scalar).

    Parameters
    ----------
    envelope : callable, optional
        ``envelope(n, k) >= |a[n, k]|`` for every history.
    second_moment : callable, optional
        ``second_moment(n, k, spec)``: exact ``E|a[n, k]|^2`` under the
        innovation spec, or ``None`` where no closed form is known.
    matrix : CoefficientMatrix, optional
        Set for constant rules; lets every computation reduce to the
        deterministic-coefficient code path.
    """

    func: Callable
    envelope: Optional[Callable[[int, int], float]] = None
    second_moment: Optional[Callable] = None
    n_max: int = UNBOUNDED
    name: str = ""
    matrix: Optional[CoefficientMatrix] = None


def realize_coefficients(rule, Z, N=None):
    """Coefficient matrices realised on a batch of innovation paths.

    ``Z`` is ``(R, N, d)`` (or ``(N, d)`` for a single path); returns
    ``(R, N, N)`` (resp. ``(N, N)``).
    """
    Z = np.asarray(Z, dtype=np.float64)
    single = Z.ndim == 2
    if single:
        Z = Z[None]
    R, length, _ = Z.shape
    N = length if N is None else check_positive_int(N, "N")
    if N > min(length, rule.n_max):
        raise ValueError(f"rule or innovations do not reach index {N}")
    if rule.matrix is not None:
        A = np.broadcast_to(rule.matrix.dense(N), (R, N, N))
        return A[0] if single else A
    A = None
    for k in range(1, N + 1):
        history = Z[:, :k - 1, :]
        history.flags.writeable = False
        for n in range(k, N + 1):
            vals = np.broadcast_to(np.asarray(rule.func(n, k, history)), (R,))
            if A is None:
                A = np.zeros((R, N, N), dtype=np.result_type(vals, np.float64))
            A[:, n - 1, k - 1] = vals
    return A[0] if single else A


def _terms(A, Z):
    if A.ndim == 2:
        return np.einsum("nk,rkd->rnd", A, Z)
    return np.einsum("rnk,rkd->rnd", A, Z)


def simulate_predictable(rule, spec, N, seed=0, stream=0):
    """One path whose coefficient ``(n, k)`` sees exactly ``Z_1..Z_{k-1}``."""
    N = check_positive_int(N, "N")
    Z = sample_innovations(spec, N, seed, stream)
    A = realize_coefficients(rule, Z[None], N)
    return SeriesPath.from_terms(_terms(A, Z[None])[0])


def _diagonal_sums(sq, N, K):
    """Per-replica ``sum_{k<=K} sq[:, n+k-2, k-1]`` for diagonals ``n = 1..N``."""
    return np.stack([np.diagonal(sq, offset=-(n - 1), axis1=1, axis2=2)[:, :K].sum(axis=1)
                     for n in range(1, N + 1)], axis=1)


def _plugin_criterion(diag_sums, seed):
    """``sum_n sqrt(mean_r D_rn)`` with a delta-method standard error."""
    means = diag_sums.mean(axis=0)
    value = math.fsum(np.sqrt(means))
    safe = np.where(means > 0, means, 1.0)
    weights = np.where(means > 0, 0.5 / np.sqrt(safe), 0.0)
    linear = diag_sums @ weights
    R = diag_sums.shape[0]
    se = std_error(linear)
    return McEstimate(mean=value, std_error=se, replicas=R, seed=seed,
                      streams=(0, len(replica_blocks(R)) - 1))


def _exact_second_moments(rule, spec, L):
    if rule.second_moment is None:
        return None
    out = np.zeros((L, L))
    for n in range(1, L + 1):
        for k in range(1, n + 1):
            v = rule.second_moment(n, k, spec)
            if v is None:
                return None
            out[n - 1, k - 1] = v
    return out


def expected_square_criterion(rule, spec, N, K, replicas=10_000, seed=0, threads=1):
    """Estimate ``sum_{n<=N} (sum_{k<=K} E|a[n+k-1,k]|^2)^{1/2}``.

    Returns ``(estimate, envelope_value)``.  The estimate plugs replica means of
    ``|a|^2`` into the criterion; its standard error comes from the
    delta method.  ``envelope_value`` is ``sum_n (sum_k envelope^2)^{1/2}``,
    a deterministic upper bound, or ``None`` without an envelope.
    """
    N = check_positive_int(N, "N")
    K = check_positive_int(K, "K")
    L = N + K - 1

    def per_block(Z):
        return _diagonal_sums(np.abs(realize_coefficients(rule, Z, L)) ** 2, N, K)

    est = _plugin_criterion(run_replicas(per_block, spec, L, replicas, seed, threads), seed)
    envelope_value = None
    if rule.envelope is not None:
        env = np.zeros((L, L))
        for n in range(1, L + 1):
            for k in range(1, n + 1):
                env[n - 1, k - 1] = rule.envelope(n, k) ** 2
        envelope_value = math.fsum(np.sqrt(_diagonal_sums(env[None], N, K)[0]))
    return est, envelope_value


@dataclass(frozen=True)
class MartingaleReport:
    """``E max ||S_n||`` against twice the expected-square diagonal sum.

    ``rhs_method`` is ``"exact"`` when ``E|a|^2`` came from a closed form or
    enumeration, ``"mc"`` when it was estimated (error in ``rhs_se``).
    """

    lhs: Union[McEstimate, float]
    rhs: float
    rhs_se: float
    rhs_method: str
    check: BoundCheck

    @property
    def status(self):
        return self.check.status


def _bound_from_second_moments(sq_means, N):
    return 2.0 * math.fsum(math.sqrt(max(0.0, math.fsum(np.diagonal(sq_means, -(n - 1)))))
                           for n in range(1, N + 1))


def martingale_bound(rule, spec=None, N=1, replicas=DEFAULT_REPLICAS, seed=0, exact=False,
                     threads=1, cap=None):
    """Check ``E max_{n<=N} ||S_n|| <= 2 sum_n (sum_k E|a[n+k-1,k]|^2)^{1/2}``.

    Exact mode enumerates all Rademacher outcomes jointly for the path and the
    coefficients.  In Monte Carlo mode the right-hand side uses the rule's
    closed-form second moments when available, otherwise an estimate from an
    independent replica set whose error is folded into the verdict.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    N = check_positive_int(N, "N")
    if rule.matrix is not None:
        rhs = levy_bound(rule.matrix, N)
        A = rule.matrix.dense(N)
        if exact:
            lhs = exact_mean(lambda Z: batch_sup(A, Z), spec, N, cap)
            return MartingaleReport(lhs, rhs, 0.0, "exact", judge_exact(lhs, rhs))
        est = McEstimate.from_samples(
            run_replicas(lambda Z: batch_sup(A, Z), spec, N, replicas, seed, threads), seed)
        return MartingaleReport(est, rhs, 0.0, "exact", judge_mc(est, rhs))

    def sup_of(Z):
        return _norm(np.cumsum(_terms(realize_coefficients(rule, Z, N), Z), axis=1)).max(axis=1)

    if exact:
        lhs = exact_mean(sup_of, spec, N, cap)
        sq = np.zeros((N, N))
        count = 0
        for Z in exact_innovation_chunks(spec, N, cap):
            sq += (np.abs(realize_coefficients(rule, Z, N)) ** 2).sum(axis=0)
            count += Z.shape[0]
        rhs = _bound_from_second_moments(sq / count, N)
        return MartingaleReport(lhs, rhs, 0.0, "exact", judge_exact(lhs, rhs))

    est = McEstimate.from_samples(run_replicas(sup_of, spec, N, replicas, seed, threads), seed)
    moments = _exact_second_moments(rule, spec, N)
    if moments is not None:
        rhs = _bound_from_second_moments(moments, N)
        return MartingaleReport(est, rhs, 0.0, "exact", judge_mc(est, rhs))

    def per_block(Z):
        return _diagonal_sums(np.abs(realize_coefficients(rule, Z, N)) ** 2, N, N)

    rhs_seed = (seed + _RHS_SEED_OFFSET) % 2**64
    half = _plugin_criterion(run_replicas(per_block, spec, N, replicas, rhs_seed, threads),
                             rhs_seed)
    rhs, rhs_se = 2.0 * half.mean, 2.0 * half.std_error
    return MartingaleReport(est, rhs, rhs_se, "mc", judge_mc(est, rhs, rhs_se))


@dataclass(frozen=True)
class DoobReport:
    """``E max_j M_j^2`` versus ``4 E M_N^2`` for one decomposition component."""

    component: int
    sup_second_moment: float
    terminal_second_moment: float
    method: str
    check: BoundCheck

    @property
    def ratio(self):
        if self.terminal_second_moment == 0:
            return 1.0 if self.sup_second_moment == 0 else math.inf
        return self.sup_second_moment / self.terminal_second_moment

    @property
    def status(self):
        return self.check.status


def _component_norms(source, Z, n, N):
    """``||s_{n,N}||`` at positions ``j = n..N`` for each path, shape ``(R, N-n+1)``."""
    if isinstance(source, CoefficientMatrix):
        A = source.dense(N)
        diag = np.diagonal(A, offset=-(n - 1))[None, :]
    else:
        A = realize_coefficients(source, Z, N)
        diag = np.diagonal(A, offset=-(n - 1), axis1=1, axis2=2)
    partial = np.cumsum(diag[:, :, None] * Z[:, :N - n + 1, :], axis=1)
    return _norm(partial)


def doob_check(n, source, spec=None, N=1, exact=True, replicas=DEFAULT_REPLICAS, seed=0,
               threads=1, cap=None):
    """Doob's L² maximal inequality on component ``n`` of the prefix decomposition.

    ``source`` is a :class:`CoefficientMatrix` or a :class:`PredictableRule`.
    Monte Carlo mode checks ``E[max_j M_j^2 - 4 M_N^2] <= 0`` at the 3-SE margin.
    """
    spec = InnovationSpec("rademacher") if spec is None else spec
    N = check_positive_int(N, "N")
    n = check_positive_int(n, "n")
    if n > N:
        raise ValueError(f"component {n} exceeds horizon {N}")

    def moments(Z):
        M = _component_norms(source, Z, n, N)
        return np.stack([(M ** 2).max(axis=1), M[:, -1] ** 2], axis=1)

    if exact:
        sup2 = exact_mean(lambda Z: moments(Z)[:, 0], spec, N, cap)
        end2 = exact_mean(lambda Z: moments(Z)[:, 1], spec, N, cap)
        return DoobReport(n, sup2, end2, "exact", judge_exact(sup2, 4.0 * end2))
    vals = run_replicas(moments, spec, N, replicas, seed, threads)
    diff = McEstimate.from_samples(vals[:, 0] - 4.0 * vals[:, 1], seed)
    check = judge_mc(diff, 0.0)
    return DoobReport(n, float(vals[:, 0].mean()), float(vals[:, 1].mean()), "mc", check)


# Catalog rules.  The "previous draw" of a vector innovation is the sum of its
# coordinates, which is the scalar draw itself under axis-cycling.

def _previous(history):
    return history[:, -1, :].sum(axis=-1)


def _clamp_second_moment(spec):
    if spec.embedding == "isotropic" and spec.dim > 1:
        return None
    return {"rademacher": 1.0,
            "gaussian": 1.0 - 2.0 * math.exp(-0.5) / math.sqrt(2.0 * math.pi),
            "uniform": 1.0 - 2.0 / (3.0 * math.sqrt(3.0))}[spec.distribution]


def constant_rule(M):
    """Deterministic coefficients taken from ``M``."""
    def func(n, k, history):
        return M.entry(n, k)

    return PredictableRule(func=func, envelope=lambda n, k: abs(M.entry(n, k)),
                           second_moment=lambda n, k, spec: abs(M.entry(n, k)) ** 2,
                           n_max=M.n_max, name=f"constant:{M.name}", matrix=M)


def _scale(scale):
    return LAWS[scale] if isinstance(scale, str) else scale


def sign_rule(scale="inv2"):
    """``a[n,1] = c(n)``, ``a[n,k] = sign(Z_{k-1}) c(n)`` for ``k >= 2`` (sign(0) = +1)."""
    c = _scale(scale)

    def func(n, k, history):
        if k == 1:
            return float(c(n))
        return np.where(_previous(history) >= 0, 1.0, -1.0) * float(c(n))

    return PredictableRule(func=func, envelope=lambda n, k: abs(float(c(n))),
                           second_moment=lambda n, k, spec: float(c(n)) ** 2,
                           name=f"sign:{scale if isinstance(scale, str) else 'custom'}")


def clamp_rule(scale="geometric"):
    """``a[n,1] = c(n)``, ``a[n,k] = clamp(Z_{k-1}, -1, 1) c(n)`` for ``k >= 2``."""
    c = _scale(scale)

    def func(n, k, history):
        if k == 1:
            return float(c(n))
        return np.clip(_previous(history), -1.0, 1.0) * float(c(n))

    def second_moment(n, k, spec):
        if k == 1:
            return float(c(n)) ** 2
        m = _clamp_second_moment(spec)
        return None if m is None else m * float(c(n)) ** 2

    return PredictableRule(func=func, envelope=lambda n, k: abs(float(c(n))),
                           second_moment=second_moment,
                           name=f"clamp:{scale if isinstance(scale, str) else 'custom'}")


def zero_rule():
    return PredictableRule(func=lambda n, k, history: 0.0, envelope=lambda n, k: 0.0,
                           second_moment=lambda n, k, spec: 0.0, name="zero")
