import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randseries.coeffs import (LAWS, CoefficientMatrix, TruncationError, VectorWeights,
                               absolute_sum, collinear_matrix, column_sums, criterion_sum,
                               diagonal, diagonal_matrix, diagonal_profile, levy_bound,
                               ones_matrix, power_decay_matrix, shift_mask, tail_A, tail_B,
                               weighted_criterion_sum, zero_matrix)
from randseries.covfactor import fgn0_coefficients

import oracles

finite = st.floats(-1, 1, allow_nan=False)


def tables(max_n=6):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=finite).map(np.tril))


class TestCoefficientMatrix:
    def test_table_must_be_lower_triangular(self):
        with pytest.raises(ValueError):
            CoefficientMatrix.from_table([[1.0, 2.0], [0.0, 1.0]])

    def test_exactly_one_source(self):
        with pytest.raises(ValueError):
            CoefficientMatrix()

    def test_entries_beyond_truncation_name_the_index(self):
        M = CoefficientMatrix.from_table(np.eye(3))
        with pytest.raises(TruncationError, match=r"\(4,1\)"):
            M.entries([4], [1])

    def test_support_masks_rule_output(self):
        M = CoefficientMatrix.from_rule(lambda n, k: np.ones(np.shape(n)), support="banded",
                                        bandwidth=1)
        assert M.dense(4).tolist() == [[1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]]

    def test_scalar_rule_falls_back_elementwise(self):
        M = CoefficientMatrix.from_rule(lambda n, k: float(n * 10 + k))
        assert M.dense(2).tolist() == [[11.0, 0.0], [21.0, 22.0]]

    def test_complex_table_kept(self):
        M = CoefficientMatrix.from_table([[1j, 0], [1, 2]])
        assert M.is_complex
        assert M.entry(1, 1) == 1j


class TestDiagonal:
    def test_identity(self):
        M = diagonal_matrix("ones")
        assert diagonal(M, 1, 3).tolist() == [1, 1, 1]
        assert diagonal(M, 2, 3).tolist() == [0, 0, 0]

    def test_collinear(self):
        assert diagonal(collinear_matrix("geometric"), 2, 3).tolist() == [0.25, 0, 0]

    def test_fgn0_second_diagonal(self):
        d = diagonal(fgn0_coefficients(), 2, 2)
        assert d == pytest.approx([-0.5, -math.sqrt(1 / 3)], abs=1e-15)

    def test_matches_oracle_on_rules(self):
        M = power_decay_matrix(1.5)
        for n in (1, 3, 7):
            expected = oracles.diagonal_norm(lambda a, b: (a - b + 1) ** -1.5, n, 9)
            assert np.linalg.norm(diagonal(M, n, 9)) == pytest.approx(expected, rel=1e-14)


class TestCriterion:
    def test_inverse_diagonal_approaches_analytic_limit(self):
        value, _ = criterion_sum(diagonal_matrix("inv"), 10_000, 10_000)
        assert abs(value - math.pi / math.sqrt(6)) < 1e-4

    def test_collinear_geometric(self):
        value, converged = criterion_sum(collinear_matrix("geometric"), 60, 60)
        assert value == pytest.approx(1.0, abs=1e-15)
        assert converged is True

    def test_zero(self):
        assert criterion_sum(zero_matrix(), 50, 50) == (0.0, True)

    def test_power_one_reports_divergent_inner_sum(self):
        prof = diagonal_profile(power_decay_matrix(1.0), 50, 50)
        assert prof.converged is False
        assert prof.describe() == "inner sum diverges at diagonal 1"

    def test_none_policy_has_no_flag(self):
        prof = diagonal_profile(zero_matrix(), 5, 5, tail_policy="none")
        assert prof.converged is None

    def test_analytic_policy_uses_tail_bound(self):
        prof = diagonal_profile(collinear_matrix("geometric"), 60, 5, tail_policy="analytic")
        assert prof.converged is True
        with pytest.raises(ValueError):
            diagonal_profile(ones_matrix(), 5, 5, tail_policy="analytic")

    def test_weighted_identity_matches_unweighted_inverse(self):
        W = VectorWeights.from_sq_norms(LAWS["inv2"])
        value, _ = weighted_criterion_sum(diagonal_matrix("ones"), W, 10_000, 10_000)
        assert abs(value - math.pi / math.sqrt(6)) < 1e-4

    def test_weighted_power_two_stays_below_bound(self):
        W = VectorWeights.from_sq_norms(LAWS["geometric"])
        prof = diagonal_profile(power_decay_matrix(2.0), 400, 400, weights=W)
        assert prof.converged is True
        assert np.all(np.diff(prof.partial_criterion) >= 0)
        assert prof.value < math.pi**2 / 3

    def test_zero_weights(self):
        W = VectorWeights.from_sq_norms(lambda n: np.zeros(np.shape(n)))
        assert weighted_criterion_sum(ones_matrix(), W, 10, 10)[0] == 0.0

    @settings(max_examples=50, deadline=None)
    @given(tables())
    def test_table_profile_matches_oracle(self, A):
        N = A.shape[0]
        M = CoefficientMatrix.from_table(A)
        prof = diagonal_profile(M, N, N, tail_policy="none")
        for n in range(1, N + 1):
            expected = math.sqrt(sum(A[n + k - 2, k - 1] ** 2 for k in range(1, N - n + 2)))
            assert prof.norms[n - 1] == pytest.approx(expected, rel=1e-12, abs=1e-300)
        assert prof.inner_cutoffs.tolist() == [N - n + 1 for n in range(1, N + 1)]


class TestLevyBound:
    def test_single_entry(self):
        assert levy_bound(CoefficientMatrix.from_table([[1.0]]), 1) == 2.0

    def test_two_by_two(self):
        M = CoefficientMatrix.from_table([[1, 0], [1, 1]])
        assert levy_bound(M, 2) == pytest.approx(2 * (math.sqrt(2) + 1), rel=1e-15)

    def test_zero(self):
        assert levy_bound(zero_matrix(), 2) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(tables(), st.lists(st.floats(0, 2), min_size=6, max_size=6))
    def test_matches_oracle(self, A, w):
        N = A.shape[0]
        W = VectorWeights(vectors=np.sqrt(np.array(w[:N]))[:, None])
        expected = oracles.levy_rhs(A.tolist(), w[:N])
        assert levy_bound(CoefficientMatrix.from_table(A), N, W) == pytest.approx(
            expected, rel=1e-12, abs=1e-300)


class TestTail:
    @pytest.mark.parametrize("N", [1, 5, 10])
    def test_collinear_B(self, N):
        assert tail_B(collinear_matrix("geometric"), N, 80) == pytest.approx(2.0**-N, rel=1e-12)
        assert tail_A(collinear_matrix("geometric"), N, 80) == 0.0

    def test_inverse_diagonal_A(self):
        N, K = 10, 2000
        expected = math.sqrt(sum(1 / k**2 for k in range(N + 1, K + 1)))
        assert tail_A(diagonal_matrix("inv"), N, K) == pytest.approx(expected, rel=1e-12)
        assert tail_B(diagonal_matrix("inv"), N, K) == 0.0

    def test_zero(self):
        assert tail_A(zero_matrix(), 5, 10) == tail_B(zero_matrix(), 5, 10) == 0.0

    @pytest.mark.parametrize("M", [collinear_matrix("geometric"), diagonal_matrix("inv"),
                                   fgn0_coefficients(), power_decay_matrix(2.0)])
    def test_decreasing_in_N(self, M):
        W = VectorWeights.from_sq_norms(LAWS["geometric"])
        small = tail_A(M, 20, 400, W) + tail_B(M, 20, 400, W)
        large = tail_A(M, 200, 400, W) + tail_B(M, 200, 400, W)
        assert large < small


class TestAbsoluteAndColumns:
    def test_inverse_diagonal_diverges(self):
        value, settled = absolute_sum(diagonal_matrix("inv"), 1000)
        assert value == pytest.approx(sum(1 / n for n in range(1, 1001)), rel=1e-12)
        assert settled is False

    def test_inverse_square_diagonal(self):
        value, _ = absolute_sum(diagonal_matrix("inv2"), 100_000)
        assert value == pytest.approx(math.pi**2 / 6, abs=1e-4)

    def test_zero(self):
        assert absolute_sum(zero_matrix(), 10)[0] == 0.0
        assert column_sums(zero_matrix(), 4).tolist() == [0, 0, 0, 0]

    def test_collinear_columns(self):
        c = column_sums(collinear_matrix("geometric"), 12)
        assert c[0] == pytest.approx(1 - 2.0**-12, rel=1e-15)
        assert np.all(c[1:] == 0)

    def test_diagonal_columns(self):
        assert column_sums(diagonal_matrix("inv"), 3).tolist() == [1, 0.5, 1 / 3]

    def test_ones_columns(self):
        assert column_sums(ones_matrix(), 3).tolist() == [3, 2, 1]

    @settings(max_examples=30, deadline=None)
    @given(tables())
    def test_banded_absolute_matches_dense(self, A):
        N = A.shape[0]
        M = CoefficientMatrix.from_rule(lambda n, k: A[n - 1, k - 1], support="banded",
                                        bandwidth=1, n_max=N)
        expected = np.abs(np.tril(np.triu(A, -1))).sum()
        assert absolute_sum(M, N, tail_policy="none")[0] == pytest.approx(expected, abs=1e-12)


class TestPowerAndShift:
    def test_power_entries(self):
        M = power_decay_matrix(2.0)
        assert M.entry(3, 1) == pytest.approx(1 / 9)
        assert M.entry(3, 3) == 1.0
        assert power_decay_matrix(1.0).dense(5)[:, 0].tolist() == pytest.approx(
            [1, 1 / 2, 1 / 3, 1 / 4, 1 / 5])

    @given(st.floats(0.1, 5))
    def test_power_diagonal_is_one(self, alpha):
        assert np.all(np.diag(power_decay_matrix(alpha).dense(6)) == 1.0)

    def test_shift(self):
        M = ones_matrix(n_max=4)
        assert shift_mask(M, 0) is M
        assert np.all(shift_mask(M, 4).dense(4) == 0)
        S = shift_mask(M, 1).dense(3)
        assert S[0].tolist() == [0, 0, 0] and S[1:].tolist() == [[1, 1, 0], [1, 1, 1]]

    def test_shift_table(self):
        S = shift_mask(CoefficientMatrix.from_table(np.tril(np.ones((3, 3)))), 2)
        assert S.dense(3).tolist() == [[0, 0, 0], [0, 0, 0], [1, 1, 1]]
