import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randseries.formats import (FormatError, format_covmat, format_trimat, format_vecs,
                                load_covariance, load_matrix, load_rule, load_weights,
                                parse_covmat, parse_grid, parse_int_range, parse_trimat,
                                parse_vecs)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestTrimat:
    def test_comments_and_blank_lines(self):
        text = "# fixture\ntrimat v1 N=3\n\n1\n2 3   # second row\n4 5 6\n"
        assert parse_trimat(text).tolist() == [[1, 0, 0], [2, 3, 0], [4, 5, 6]]

    def test_complex_pairs(self):
        table = parse_trimat("trimat v1 N=2\n1,2\n0 -1,0.5\n")
        assert table[0, 0] == 1 + 2j and table[1, 1] == -1 + 0.5j

    @pytest.mark.parametrize("text, lineno", [
        ("trimat v1 N=2\n1\n1 2 3\n", 3),
        ("trimat v2 N=2\n1\n1 2\n", 1),
        ("trimat v1 N=2\n1\n1 x\n", 3),
        ("trimat v1 N=2\n1\n", 2),
        ("trimat v1 N=1\n1\n2\n", 3),
    ])
    def test_errors_carry_line_numbers(self, text, lineno):
        with pytest.raises(FormatError) as info:
            parse_trimat(text, "m.trimat")
        assert info.value.lineno == lineno
        assert f"m.trimat:{lineno}:" in str(info.value)

    def test_empty(self):
        with pytest.raises(FormatError):
            parse_trimat("# nothing\n")

    @settings(max_examples=50)
    @given(st.integers(1, 6).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=finite).map(np.tril)))
    def test_round_trip_is_lossless(self, A):
        assert np.array_equal(parse_trimat(format_trimat(A)), A)

    def test_complex_round_trip(self):
        A = np.array([[1 + 1e-17j, 0], [0.1 - 2j, 3]])
        assert np.array_equal(parse_trimat(format_trimat(A)), A)


class TestOtherFormats:
    def test_covmat_round_trip(self):
        R = np.array([[1.0, 0.1], [0.1, 2.0]])
        assert np.array_equal(parse_covmat(format_covmat(R)), R)

    def test_covmat_rows_need_full_width(self):
        with pytest.raises(FormatError):
            parse_covmat("covmat v1 N=2\n1\n1 2\n")

    def test_vecs_round_trip(self):
        U = np.array([[1.0, 0.5], [0.25, -1.0], [0.0, 3.0]])
        assert np.array_equal(parse_vecs(format_vecs(U)), U)

    def test_vecs_needs_dimension(self):
        with pytest.raises(FormatError):
            parse_vecs("vecs v1 N=1\n1\n")


class TestSources:
    def test_named_matrices(self):
        assert load_matrix("fgn0").name == "fgn0"
        assert load_matrix("diag-ones").dense(2).tolist() == [[1, 0], [0, 1]]
        assert load_matrix("diag:inv2").entry(2, 2) == 0.25
        assert load_matrix("collinear:geometric").entry(3, 1) == 0.125
        assert load_matrix("power:alpha=2").entry(3, 1) == pytest.approx(1 / 9)
        assert np.all(load_matrix("zero").dense(3) == 0)
        assert load_matrix("ones").dense(2).tolist() == [[1, 0], [1, 1]]
        assert load_matrix("fgn:H=0.5", N=4).dense(4) == pytest.approx(np.eye(4), abs=1e-12)

    def test_random_matrix_is_seeded(self):
        a = load_matrix("random:seed=3", N=4).dense(4)
        assert np.array_equal(a, load_matrix("random:seed=3", N=4).dense(4))
        assert np.all(np.abs(a) <= 1) and np.all(np.triu(a, 1) == 0)

    def test_unknown_matrix(self):
        with pytest.raises(ValueError, match="unknown entry law"):
            load_matrix("diag:cubic")
        with pytest.raises(ValueError):
            load_matrix("nonsense")

    def test_file_sources(self, tmp_path):
        p = tmp_path / "m.trimat"
        p.write_text("trimat v1 N=2\n1\n0.5 2\n")
        assert load_matrix(str(p)).dense(2).tolist() == [[1, 0], [0.5, 2]]
        c = tmp_path / "r.covmat"
        c.write_text("covmat v1 N=2\n1 0\n0 1\n")
        assert load_covariance(str(c)).size == 2
        w = tmp_path / "u.vecs"
        w.write_text("vecs v1 N=2 d=1\n1\n0.5\n")
        assert load_weights(str(w)).sq_norms(np.array([1, 2])).tolist() == [1, 0.25]

    def test_weights(self):
        assert load_weights(None) is None
        assert load_weights("geometric").sq_norms(np.array([1, 2])) == pytest.approx([0.5, 0.25])
        assert load_weights("unit").sq_norms(np.array([5])).tolist() == [1.0]
        trig = load_weights("trig:inv,inv2")
        assert trig.dim == 2
        assert trig.sq_norms(np.array([2]))[0] == pytest.approx(0.25 + 1 / 16)
        with pytest.raises(ValueError):
            load_weights("trig:inv")

    def test_covariance(self):
        assert load_covariance("fgn:H=0.3", N=5).hurst == pytest.approx(0.3)
        with pytest.raises(ValueError):
            load_covariance("fgn:H=0.3")

    def test_rules(self):
        assert load_rule("sign:inv2").name == "sign:inv2"
        assert load_rule("clamp:geometric").name == "clamp:geometric"
        assert load_rule("zero").name == "zero"
        assert load_rule("constant", load_matrix("fgn0")).matrix is not None
        with pytest.raises(ValueError):
            load_rule("constant")


class TestGrids:
    def test_grid(self):
        assert parse_grid("0.5:3:6").tolist() == [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        with pytest.raises(ValueError):
            parse_grid("1:2")

    def test_int_range(self):
        assert parse_int_range("2:4") == [2, 3, 4]
        assert parse_int_range("1,5,7") == [1, 5, 7]
