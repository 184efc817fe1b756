import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxlab.errors import DimensionError, InvalidCodebookError
from proxlab.quantize import alt_quantize, row_wise, sign_quantize, ternary_quantize

from conftest import brute_force_residual

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 12), elements=finite)


class TestSignQuantize:
    def test_componentwise(self):
        np.testing.assert_array_equal(sign_quantize([0.3, -2.0]), [1, -1])

    def test_identity_on_binary(self):
        np.testing.assert_array_equal(sign_quantize([1, -1]), [1, -1])

    def test_zero_maps_to_plus_one(self):
        np.testing.assert_array_equal(sign_quantize([0.0]), [1])
        np.testing.assert_array_equal(sign_quantize([-0.0]), [1])

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            sign_quantize([])

    @given(vectors)
    def test_idempotent(self, x):
        s = sign_quantize(x)
        assert set(np.unique(s)) <= {-1.0, 1.0}
        np.testing.assert_array_equal(sign_quantize(s), s)


class TestTernary:
    def test_mixed_vector(self):
        out, lv = ternary_quantize([0.3, -0.2, 1.0, -1.5])
        np.testing.assert_allclose(out, [0, 0, 1.0, -1.5])
        assert lv.delta == pytest.approx(0.525)
        assert (lv.pos_level, lv.neg_level) == (1.0, -1.5)

    def test_zero_vector(self):
        out, lv = ternary_quantize([0, 0, 0])
        np.testing.assert_array_equal(out, [0, 0, 0])
        assert (lv.delta, lv.pos_level, lv.neg_level) == (0, 0, 0)

    def test_both_above_threshold(self):
        out, lv = ternary_quantize([1, 1])
        np.testing.assert_array_equal(out, [1, 1])
        assert lv.delta == pytest.approx(0.7)
        assert (lv.pos_level, lv.neg_level) == (1, 0)

    @given(vectors)
    def test_support(self, x):
        out, lv = ternary_quantize(x)
        assert np.all(np.isin(out, [lv.neg_level, 0.0, lv.pos_level]))
        assert lv.delta == pytest.approx(0.7 * np.mean(np.abs(x)))


class TestAltQuantize:
    def test_one_bit(self):
        cb = alt_quantize([1, -2, 3], k=1)
        np.testing.assert_allclose(cb.levels, [2.0])
        np.testing.assert_array_equal(cb.signs[:, 0], [1, -1, 1])

    def test_already_binary(self):
        cb = alt_quantize([1, 1, 1, 1], k=1)
        np.testing.assert_allclose(cb.levels, [1.0])
        assert np.all(cb.signs == 1)
        assert cb.residual == 0

    def test_two_bit_exact_structure(self):
        x = np.array([0.9, 1.1, -0.9, -1.1])
        cb = alt_quantize(x, k=2)
        assert cb.residual == pytest.approx(brute_force_residual(x, 2), abs=1e-12)
        assert cb.residual < 1e-20
        assert sorted(np.abs(cb.levels)) == pytest.approx([0.1, 1.0])

    def test_k_exceeds_dimension(self):
        with pytest.raises(InvalidCodebookError):
            alt_quantize([1.0, 2.0], k=3)

    def test_k_zero(self):
        with pytest.raises(InvalidCodebookError):
            alt_quantize([1.0, 2.0], k=0)

    @given(vectors)
    def test_one_bit_is_sign_and_mean_abs(self, x):
        cb = alt_quantize(x, k=1)
        np.testing.assert_array_equal(cb.signs[:, 0], sign_quantize(x))
        assert cb.levels[0] == np.mean(np.abs(x))

    @settings(max_examples=60)
    @given(arrays(np.float64, st.integers(3, 10), elements=finite), st.integers(1, 3))
    def test_residual_non_increasing(self, x, k):
        cb = alt_quantize(x, k=k, iters=10)
        assert all(b <= a for a, b in zip(cb.residuals, cb.residuals[1:]))
        assert cb.residual == pytest.approx(np.sum((x - cb.reconstruct()) ** 2), abs=1e-9)

    def test_warm_start_shape_checked(self):
        cb = alt_quantize([1.0, 2.0, 3.0], k=2)
        with pytest.raises(InvalidCodebookError):
            alt_quantize([1.0, 2.0], k=2, init=cb)

    def test_coinciding_columns_use_min_norm_levels(self):
        # a vector with a single magnitude makes both columns equal after greedy
        cb = alt_quantize([2.0, -2.0, 2.0], k=2)
        assert cb.residual == pytest.approx(0.0, abs=1e-20)
        assert np.all(np.isfinite(cb.levels))


class TestRowWise:
    def test_matches_per_row(self):
        cbs = row_wise(np.array([[1, -2, 3], [1, 1, 1]]), k=1)
        np.testing.assert_allclose([c.levels[0] for c in cbs], [2.0, 1.0])
        assert cbs[1].residual == 0

    def test_single_row(self):
        x = np.array([0.4, -1.3, 2.2, 0.1])
        (cb,) = row_wise(x[None, :], k=2)
        ref = alt_quantize(x, k=2)
        np.testing.assert_array_equal(cb.reconstruct(), ref.reconstruct())

    def test_zero_matrix(self):
        cbs = row_wise(np.zeros((3, 4)), k=1)
        assert all(c.levels[0] == 0 and c.residual == 0 for c in cbs)

    def test_empty(self):
        with pytest.raises(DimensionError):
            row_wise(np.zeros((0, 3)), k=1)
