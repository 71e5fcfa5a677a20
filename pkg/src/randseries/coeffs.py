"""Triangular coefficient matrices and the deterministic quantities built on them.

Indices are 1-based throughout, matching the usual ``a[n, k]`` notation with
``1 <= k <= n``.  Every infinite sum is computed at explicit cutoffs; the
``converged`` flags returned alongside are evidence that the truncation has
settled ("criterion not falsified at this truncation"), never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ._validation import check_lower_triangular, check_positive_int

SUPPORTS = ("full", "banded", "collinear", "diagonal")
TAIL_POLICIES = ("none", "geometric", "analytic")

# Rule-backed matrices are conceptually infinite.
UNBOUNDED = 2**62

# Entries evaluated per chunk when scanning many diagonals.
_CHUNK_ENTRIES = 2_000_000


class TruncationError(IndexError):
    """Raised when an entry beyond a matrix's truncation order is requested."""


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Lower-triangular coefficient array ``a[n, k]``, explicit or rule-backed.

    Parameters
    ----------
    table : ndarray, optional
        Square lower-triangular table; ``table[n-1, k-1] = a[n, k]``.
    rule : callable, optional
        ``rule(n, k)`` returning the entries for integer arrays ``n`` and ``k``
        (1-based, ``k <= n``).  Must be deterministic; numpy-vectorised rules
        are evaluated in bulk, scalar rules fall back to element-wise calls.
    support : {"full", "banded", "collinear", "diagonal"}
        Declared sparsity.  Entries outside the support are zero whatever the
        rule returns there.
    bandwidth : int, optional
        For ``support="banded"``: row ``n`` combines ``Z_{n-bandwidth}..Z_n``
        only, i.e. ``a[n, k] = 0`` whenever ``k < n - bandwidth``.
    n_max : int, optional
        Truncation order, the largest row index that may be materialised.
    tail_bound : callable, optional
        ``tail_bound(N, K)``: closed-form upper bound on how much the
        ``(N, K)``-truncated diagonal criterion falls short of its limit.
        Consulted by the ``"analytic"`` tail policy.
    """

    table: Optional[np.ndarray] = None
    rule: Optional[Callable] = None
    support: str = "full"
    bandwidth: Optional[int] = None
    n_max: Optional[int] = None
    tail_bound: Optional[Callable[[int, int], float]] = None
    name: str = ""

    def __post_init__(self):
        if (self.table is None) == (self.rule is None):
            raise ValueError("exactly one of table or rule must be given")
        if self.support not in SUPPORTS:
            raise ValueError(f"support must be one of {SUPPORTS}, got {self.support!r}")
        if self.support == "banded":
            check_positive_int(self.bandwidth, "bandwidth", minimum=0)
        if self.table is not None:
            table = check_lower_triangular(self.table)
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
            n_max = table.shape[0] if self.n_max is None else min(self.n_max, table.shape[0])
            object.__setattr__(self, "n_max", n_max)
        elif self.n_max is None:
            object.__setattr__(self, "n_max", UNBOUNDED)
        check_positive_int(self.n_max, "n_max")

    @classmethod
    def from_table(cls, table, name=""):
        return cls(table=table, name=name)

    @classmethod
    def from_rule(cls, rule, support="full", bandwidth=None, n_max=None,
                  tail_bound=None, name=""):
        return cls(rule=rule, support=support, bandwidth=bandwidth, n_max=n_max,
                   tail_bound=tail_bound, name=name)

    @property
    def is_complex(self):
        if self.table is not None:
            return np.iscomplexobj(self.table)
        probe = self.entries(np.array([1]), np.array([1]))
        return np.iscomplexobj(probe)

    def support_mask(self, n, k):
        n, k = np.broadcast_arrays(np.asarray(n), np.asarray(k))
        mask = (k >= 1) & (k <= n)
        if self.support == "banded":
            mask &= (n - k) <= self.bandwidth
        elif self.support == "collinear":
            mask &= k == 1
        elif self.support == "diagonal":
            mask &= n == k
        return mask

    def entries(self, n, k):
        """Entries ``a[n, k]`` for broadcastable 1-based index arrays."""
        n, k = np.broadcast_arrays(np.asarray(n, dtype=np.int64),
                                   np.asarray(k, dtype=np.int64))
        if n.size and n.max() > self.n_max:
            bad = np.argmax(n > self.n_max)
            raise TruncationError(
                f"entry ({n.flat[bad]},{k.flat[bad]}) is beyond truncation order {self.n_max}")
        mask = self.support_mask(n, k)
        if self.table is not None:
            out = np.zeros(n.shape, dtype=self.table.dtype)
            out[mask] = self.table[n[mask] - 1, k[mask] - 1]
            return out
        nm, km = n[mask], k[mask]
        vals = _eval_rule(self.rule, nm, km)
        out = np.zeros(n.shape, dtype=vals.dtype if vals.size else np.float64)
        out[mask] = vals
        return out

    def entry(self, n, k):
        return self.entries(np.array([n]), np.array([k]))[0].item()

    def dense(self, N):
        """Materialise the leading ``N x N`` block."""
        N = check_positive_int(N, "N")
        idx = np.arange(1, N + 1)
        return self.entries(idx[:, None], idx[None, :])


def _eval_rule(rule, n, k):
    if n.size == 0:
        return np.zeros(0)
    try:
        vals = np.asarray(rule(n, k))
        if vals.shape != n.shape:
            vals = np.broadcast_to(vals, n.shape).copy()
    except (TypeError, ValueError):
        vals = np.array([rule(int(a), int(b)) for a, b in zip(n, k)])
    if not np.iscomplexobj(vals):
        vals = vals.astype(np.float64)
    return vals


@dataclass(frozen=True, eq=False)
class VectorWeights:
    """Weight vectors ``u_n`` in ``R^d`` multiplying the scalar terms ``X_n``.

    Either an explicit ``(N, d)`` array of vectors or a rule ``n -> (len(n), d)``
    array.  :meth:`from_sq_norms` builds weights along the first axis with a
    prescribed squared norm, which is all the criteria depend on.
    """

    vectors: Optional[np.ndarray] = None
    rule: Optional[Callable] = None
    dim: int = 1
    name: str = ""

    def __post_init__(self):
        if (self.vectors is None) == (self.rule is None):
            raise ValueError("exactly one of vectors or rule must be given")
        if self.vectors is not None:
            vecs = np.asarray(self.vectors, dtype=np.float64)
            if vecs.ndim == 1:
                vecs = vecs[:, None]
            if vecs.ndim != 2 or not np.all(np.isfinite(vecs)):
                raise ValueError("vectors must be a finite (N, d) array")
            vecs.setflags(write=False)
            object.__setattr__(self, "vectors", vecs)
            object.__setattr__(self, "dim", vecs.shape[1])
        check_positive_int(self.dim, "dim")

    @property
    def n_max(self):
        return UNBOUNDED if self.vectors is None else self.vectors.shape[0]

    @classmethod
    def from_sq_norms(cls, sq_norm, name=""):
        """Weights ``u_n = sqrt(sq_norm(n)) e_1``."""
        def rule(n):
            return np.sqrt(np.asarray(sq_norm(n), dtype=np.float64))[..., None]
        return cls(rule=rule, dim=1, name=name)

    @classmethod
    def from_trig(cls, cos_coef, sin_coef, name=""):
        """Trigonometric weights ``f_n = A_n cos(nx) + B_n sin(nx)``.

        Represented by the coordinate pair ``(A_n, B_n)``, so that
        ``||f_n||^2 = A_n^2 + B_n^2``.
        """
        def rule(n):
            n = np.asarray(n, dtype=np.float64)
            return np.stack([np.broadcast_to(cos_coef(n), n.shape),
                             np.broadcast_to(sin_coef(n), n.shape)], axis=-1)
        return cls(rule=rule, dim=2, name=name)

    def at(self, n):
        """Vectors ``u_n`` for a 1-based index array, shape ``(len(n), d)``."""
        n = np.asarray(n, dtype=np.int64)
        if n.size and (n.min() < 1 or n.max() > self.n_max):
            raise TruncationError(f"weight index {n.max()} beyond {self.n_max}")
        if self.vectors is not None:
            return self.vectors[n - 1]
        out = np.asarray(self.rule(n), dtype=np.float64)
        return out.reshape(n.shape + (self.dim,))

    def sq_norms(self, n):
        u = self.at(n)
        return np.einsum("...i,...i->...", u, u)


@dataclass(frozen=True, eq=False)
class DiagonalProfile:
    """ℓ² norms of the diagonals ``d_n = (a[n+k-1, k])_k`` and their running sums.

    ``inner_cutoffs[n-1]`` is the number of entries of ``d_n`` actually summed;
    it falls below the requested cutoff when the matrix truncation clips it.
    ``unsettled_diagonal`` names the first diagonal whose inner sum had not
    settled, if any.
    """

    norms: np.ndarray
    partial_criterion: np.ndarray
    inner_cutoffs: np.ndarray
    tail_policy: str
    converged: Optional[bool]
    unsettled_diagonal: Optional[int] = None
    rtol: float = 1e-8

    @property
    def value(self):
        return math.fsum(self.norms)

    def describe(self):
        if self.converged is None:
            return "no tail policy: partial value only"
        if self.unsettled_diagonal is not None:
            return f"inner sum diverges at diagonal {self.unsettled_diagonal}"
        if self.converged:
            return "criterion not falsified at this truncation"
        return "outer partial sums not settled"


@dataclass(frozen=True)
class TailReport:
    N: int
    A_N: float
    B_N: float

    @property
    def bound_rhs(self):
        return 2.0 * (self.A_N + self.B_N)


def _settled(partials, rtol):
    """True when the last decade (final tenth) of partial sums moved by at most ``rtol``."""
    partials = np.asarray(partials, dtype=np.float64)
    if partials.size == 0:
        return True
    last = partials[-1]
    span = max(1, math.ceil(partials.size / 10))
    before = partials[-span - 1] if partials.size > span else 0.0
    return bool(abs(last - before) <= rtol * abs(last))


def _active_diagonals(M, n_hi):
    """Highest diagonal index that can be nonzero, given the declared support."""
    if M.support == "diagonal":
        return min(1, n_hi)
    if M.support == "banded":
        return min(M.bandwidth + 1, n_hi)
    return n_hi


def _diagonal_sq_block(M, ns, K, weights):
    """Squared moduli ``|a[n+k-1,k]|^2 ||u_{n+k-1}||^2`` for diagonals ``ns``.

    Returns the ``(len(ns), K_eff)`` array and the per-diagonal lengths; entries
    past a diagonal's length are zero.
    """
    limit = M.n_max if weights is None else min(M.n_max, weights.n_max)
    lengths = np.clip(limit - ns + 1, 0, K)
    width = 1 if M.support == "collinear" else int(lengths.max(initial=0))
    k = np.arange(1, width + 1)[None, :]
    rows = ns[:, None] + k - 1
    valid = k <= lengths[:, None]
    safe_rows = np.where(valid, rows, 1)
    vals = np.abs(M.entries(safe_rows, np.broadcast_to(k, safe_rows.shape))) ** 2
    if weights is not None:
        vals = vals * weights.sq_norms(safe_rows)
    vals[~valid] = 0.0
    return vals, lengths


def _diagonal_norms(M, n_lo, n_hi, K, weights=None, rtol=None):
    """Norms of diagonals ``n_lo..n_hi`` truncated to ``K`` entries each.

    With ``rtol`` set, also returns the first diagonal whose inner sum did not
    settle (unclipped diagonals only).
    """
    count = max(0, n_hi - n_lo + 1)
    norms = np.zeros(count)
    lengths = np.zeros(count, dtype=np.int64)
    unsettled = None
    active_hi = _active_diagonals(M, n_hi)
    if active_hi < n_lo:
        lengths[:] = np.clip((M.n_max if weights is None else min(M.n_max, weights.n_max))
                             - np.arange(n_lo, n_hi + 1) + 1, 0, K)
        return (norms, lengths, unsettled) if rtol is not None else (norms, lengths)
    width = 1 if M.support == "collinear" else K
    step = max(1, _CHUNK_ENTRIES // width)
    for start in range(n_lo, n_hi + 1, step):
        stop = min(start + step - 1, n_hi)
        ns = np.arange(start, stop + 1)
        if start > active_hi:
            limit = M.n_max if weights is None else min(M.n_max, weights.n_max)
            lengths[start - n_lo:stop - n_lo + 1] = np.clip(limit - ns + 1, 0, K)
            continue
        sq, lens = _diagonal_sq_block(M, ns, K, weights)
        norms[start - n_lo:stop - n_lo + 1] = np.sqrt(sq.sum(axis=1))
        lengths[start - n_lo:stop - n_lo + 1] = lens
        if rtol is not None and unsettled is None and M.support != "collinear":
            for i, n in enumerate(ns):
                if lens[i] < K or n > active_hi:
                    continue
                if not _settled(np.sqrt(np.cumsum(sq[i, :lens[i]])), rtol):
                    unsettled = int(n)
                    break
    if rtol is not None:
        return norms, lengths, unsettled
    return norms, lengths


def diagonal(M, n, K):
    """The first ``K`` entries ``(a[n,1], a[n+1,2], ..., a[n+K-1,K])`` of diagonal ``n``."""
    n = check_positive_int(n, "n")
    K = check_positive_int(K, "K")
    if n + K - 1 > M.n_max:
        raise TruncationError(
            f"entry ({n + K - 1},{K}) is beyond truncation order {M.n_max}")
    k = np.arange(1, K + 1)
    return M.entries(n + k - 1, k)


def diagonal_profile(M, N, K, weights=None, tail_policy="geometric", rtol=1e-8):
    """Diagonal norms ``||d_n||`` for ``n = 1..N``, each truncated to ``K`` entries.

    ``tail_policy`` decides the ``converged`` flag:

    ``"none"``
        flag is ``None``; only the partial value is reported.
    ``"geometric"``
        converged when every unclipped inner sum and the outer partial sums
        moved by less than ``rtol`` (relative) over their final tenth.
    ``"analytic"``
        converged when the matrix's ``tail_bound(N, K)`` is below
        ``rtol`` times the value.
    """
    N = check_positive_int(N, "N")
    K = check_positive_int(K, "K")
    if tail_policy not in TAIL_POLICIES:
        raise ValueError(f"tail_policy must be one of {TAIL_POLICIES}, got {tail_policy!r}")
    norms, lengths, unsettled = _diagonal_norms(M, 1, N, K, weights, rtol=rtol)
    partial = np.cumsum(norms)
    value = math.fsum(norms)
    if tail_policy == "none":
        converged, unsettled = None, None
    elif tail_policy == "geometric":
        converged = unsettled is None and _settled(partial, rtol)
    else:
        if M.tail_bound is None:
            raise ValueError("analytic tail policy needs a matrix with tail_bound")
        if weights is not None:
            raise ValueError("analytic tail policy does not cover weighted criteria")
        unsettled = None
        converged = bool(M.tail_bound(N, K) <= rtol * value)
    return DiagonalProfile(norms=norms, partial_criterion=partial, inner_cutoffs=lengths,
                           tail_policy=tail_policy, converged=converged,
                           unsettled_diagonal=unsettled, rtol=rtol)


def criterion_sum(M, N, K, tail_policy="geometric", rtol=1e-8):
    """Truncated diagonal criterion ``sum_{n<=N} ||d_n^(K)||`` and its convergence flag.

    The value is a lower bound of the infinite criterion.

    >>> criterion_sum(collinear_matrix("geometric"), 60, 60)[0]
    1.0
    """
    prof = diagonal_profile(M, N, K, tail_policy=tail_policy, rtol=rtol)
    return prof.value, prof.converged


def weighted_criterion_sum(M, W, N, K, tail_policy="geometric", rtol=1e-8):
    """As :func:`criterion_sum` with each ``|a[n+k-1,k]|^2`` weighted by ``||u_{n+k-1}||^2``."""
    prof = diagonal_profile(M, N, K, weights=W, tail_policy=tail_policy, rtol=rtol)
    return prof.value, prof.converged


def levy_bound(M, N, weights=None):
    """Right-hand side of the maximal inequality at horizon ``N``.

    ``2 * sum_{n=1}^{N} (sum_{k=1}^{N-n+1} |a[n+k-1,k]|^2 ||u_{n+k-1}||^2)^{1/2}``;
    the weights default to unit norms.  All sums are finite, so this is exact.
    """
    N = check_positive_int(N, "N")
    sq = np.abs(M.dense(N)) ** 2
    if weights is not None:
        sq = sq * weights.sq_norms(np.arange(1, N + 1))[:, None]
    norms = [math.sqrt(math.fsum(np.diagonal(sq, offset=-(n - 1)))) for n in range(1, N + 1)]
    return 2.0 * math.fsum(norms)


def tail_A(M, N, K, weights=None):
    """``sum_{n=1}^{N} (sum_{k=N+2-n}^{K} |a[n+k-1,k]|^2)^{1/2}``: the diagonals' tails past row N."""
    N = check_positive_int(N, "N")
    K = check_positive_int(K, "K")
    ns = np.arange(1, _active_diagonals(M, N) + 1)
    if ns.size == 0:
        return 0.0
    sq, _ = _diagonal_sq_block(M, ns, K, weights)
    width = sq.shape[1]
    k = np.arange(1, width + 1)[None, :]
    sq = np.where(k >= (N + 2 - ns)[:, None], sq, 0.0)
    return math.fsum(np.sqrt(sq.sum(axis=1)))


def tail_B(M, N, K, weights=None):
    """``sum_{n=N+1}^{N+K} ||d_n^(K)||``: the diagonals beyond ``N``."""
    N = check_positive_int(N, "N", minimum=0)
    K = check_positive_int(K, "K")
    norms, _ = _diagonal_norms(M, N + 1, N + K, K, weights)
    return math.fsum(norms)


def tail_report(M, N, K, weights=None):
    return TailReport(N=N, A_N=tail_A(M, N, K, weights), B_N=tail_B(M, N, K, weights))


def absolute_sum(M, N, tail_policy="geometric", rtol=1e-8):
    """``sum_{n<=N} sum_{k<=n} |a[n,k]|`` with a stagnation flag on its row partial sums.

    A comparison criterion only: it controls unconditional convergence in the
    scalar Gaussian case and is much stronger than the diagonal criterion.
    """
    N = check_positive_int(N, "N")
    rows = np.zeros(N)
    if M.support in ("diagonal", "collinear"):
        idx = np.arange(1, N + 1)
        rows = np.abs(M.entries(idx, idx if M.support == "diagonal" else np.ones_like(idx)))
    else:
        width = N if M.support == "full" else min(M.bandwidth + 1, N)
        step = max(1, _CHUNK_ENTRIES // width)
        for start in range(1, N + 1, step):
            ns = np.arange(start, min(start + step, N + 1))
            offs = np.arange(width)[None, :]
            ks = ns[:, None] - offs
            ks = np.where(ks >= 1, ks, 0)
            vals = np.abs(M.entries(np.broadcast_to(ns[:, None], ks.shape), ks))
            rows[start - 1:start - 1 + ns.size] = vals.sum(axis=1)
    value = math.fsum(rows)
    if tail_policy == "none":
        return value, None
    if tail_policy == "analytic":
        raise ValueError("absolute_sum supports the 'none' and 'geometric' policies only")
    return value, _settled(np.cumsum(rows), rtol)


def column_sums(M, N):
    """Truncated column sums ``c_k = sum_{n=k}^{N} a[n,k]`` for ``k = 1..N``.

    A diagnostic: summing columns first rearranges the series, which is not
    justified in general.
    """
    N = check_positive_int(N, "N")
    if M.support == "diagonal":
        idx = np.arange(1, N + 1)
        return M.entries(idx, idx)
    if M.support == "collinear":
        out = np.zeros(N, dtype=np.result_type(M.entries([1], [1]), np.float64))
        out[0] = np.sum(M.entries(np.arange(1, N + 1), 1))
        return out
    return M.dense(N).sum(axis=0)


def power_decay_matrix(alpha, n_max=None):
    """Rule-backed matrix ``a[n,k] = (n-k+1)^(-alpha)``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")

    def rule(n, k):
        return (n - k + 1).astype(np.float64) ** (-alpha)

    return CoefficientMatrix.from_rule(rule, n_max=n_max, name=f"power:alpha={alpha:g}")


def shift_mask(M, N):
    """Zero every row ``n <= N``: ``b[n,k] = a[n,k]`` if ``n >= N+1`` else 0."""
    N = check_positive_int(N, "N", minimum=0)
    if N == 0:
        return M
    if M.table is not None:
        table = np.array(M.table)
        table[:N, :] = 0
        return replace(M, table=table, name=f"{M.name}|shift{N}", tail_bound=None)
    base = M.rule

    def rule(n, k):
        vals = np.asarray(_eval_rule(base, n, k))
        return np.where(n >= N + 1, vals, 0)

    return replace(M, rule=rule, name=f"{M.name}|shift{N}", tail_bound=None)


# Fixed catalog of entry laws used by the named matrix and weight rules.
LAWS = {
    "geometric": lambda n: 2.0 ** (-np.asarray(n, dtype=np.float64)),
    "inv": lambda n: 1.0 / np.asarray(n, dtype=np.float64),
    "inv2": lambda n: 1.0 / np.asarray(n, dtype=np.float64) ** 2,
    "ones": lambda n: np.ones(np.shape(n)),
}

# Upper bounds on sum_{n>N} law(n) and sum_{n>N} law(n)^2.
_LAW_TAILS = {
    "geometric": (lambda N: 2.0 ** -N, lambda N: 4.0 ** -N / 3.0),
    "inv": (lambda N: math.inf, lambda N: 1.0 / N),
    "inv2": (lambda N: 1.0 / N, lambda N: 1.0 / (3.0 * N**3)),
    "ones": (lambda N: math.inf, lambda N: math.inf),
}


def _law(name):
    try:
        return LAWS[name]
    except KeyError:
        raise ValueError(f"unknown entry law {name!r}; choose from {sorted(LAWS)}") from None


def diagonal_matrix(law, n_max=None):
    """``a[n,n] = law(n)``, zero off the main diagonal (independent terms)."""
    f = _law(law)
    inner_tail = _LAW_TAILS[law][1]
    return CoefficientMatrix.from_rule(
        lambda n, k: f(n), support="diagonal", n_max=n_max,
        tail_bound=lambda N, K: math.sqrt(inner_tail(K)), name=f"diag:{law}")


def collinear_matrix(law, n_max=None):
    """``a[n,1] = law(n)``, zero elsewhere (all terms proportional to ``Z_1``)."""
    f = _law(law)
    outer_tail = _LAW_TAILS[law][0]
    return CoefficientMatrix.from_rule(
        lambda n, k: f(n), support="collinear", n_max=n_max,
        tail_bound=lambda N, K: outer_tail(N), name=f"collinear:{law}")


def zero_matrix(n_max=None):
    return CoefficientMatrix.from_rule(lambda n, k: np.zeros(np.shape(n)), support="diagonal",
                                       n_max=n_max, tail_bound=lambda N, K: 0.0, name="zero")


def ones_matrix(n_max=None):
    """All-ones lower triangle."""
    return CoefficientMatrix.from_rule(lambda n, k: np.ones(np.shape(n)), n_max=n_max,
                                       name="ones")
