import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxlab.errors import DimensionError
from proxlab.model import Objective, shifted_quadratic, toy_pair
from proxlab.theorylab import (
    REGISTRY,
    composite_minimum,
    fixed_point_condition,
    longest_constant_run,
    oscillation_start,
    run_named,
    sign_change,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
    verify_toy_failure,
)

from conftest import grid_prox

pairs = st.integers(1, 12).flatmap(
    lambda d: st.tuples(*[arrays(np.float64, d, elements=st.floats(-5, 5, allow_nan=False))] * 3))


class TestSignChange:
    def test_examples(self):
        th = np.array([0.5, -2.0, 3.0])
        assert sign_change(th, th) == 0
        assert sign_change(th, -th) == 1
        assert sign_change([1, -1, 1], [1, 1, 1]) == pytest.approx(1 / 3)

    def test_zero_is_positive(self):
        assert sign_change([0.0], [1.0]) == 0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            sign_change([1, 2], [1])

    @given(pairs)
    def test_metric(self, xyz):
        x, y, z = xyz
        assert sign_change(x, y) == sign_change(y, x)
        assert sign_change(x, z) <= sign_change(x, y) + sign_change(y, z) + 1e-15
        scale = np.linspace(0.5, 3, x.size)
        assert sign_change(scale * x, scale * y) == sign_change(x, y)

    def test_longest_run(self):
        assert longest_constant_run(np.array([[1], [1], [-1], [-1], [-1], [1]])) == 3


class TestToyFailure:
    def test_report(self):
        r = verify_toy_failure()
        assert r.status == "pass"
        assert r.measured["bc_signs_identical"]
        assert r.measured["pq_answer"] == {"+1": -1.0, "-1": 1.0}
        assert r.measured["pq_from_optimum_final"] == -1.0

    def test_deterministic(self):
        assert verify_toy_failure().to_dict() == verify_toy_failure().to_dict()


class TestTheorem1:
    def test_composite_minimum_matches_grid(self):
        for c in (0.0, 0.3, -0.45):
            t = grid_prox("smoothed-w", [c], 1.0)[0]
            from proxlab.regularize import smoothed_w
            expected = 0.5 * (t - c) ** 2 + float(smoothed_w(t, 0.2))
            assert composite_minimum(c, 1.0, 0.2) == pytest.approx(expected, abs=1e-10)

    def test_single_start(self):
        r = verify_theorem1(T_values=(1000,), inits=[[0.9]])
        assert r.status == "pass"
        assert r.measured["max_ratio"] <= 1

    def test_stationary_start(self):
        r = verify_theorem1(T_values=(10, 100), inits=[[1 / 1.2]])
        quad = [row for row in r.measured["runs"] if row["composite"] == "quadratic"]
        assert all(row["lhs"] < 1e-20 and row["proximity_lhs"] < 1e-20 for row in quad)

    def test_zero_strength_is_gradient_descent(self):
        r = verify_theorem1(T_values=(10, 100), lam=0.0, n_inits=5)
        assert r.status == "pass"


class TestTheorem2:
    def test_start_value(self):
        assert oscillation_start(0.5, 1.0, 0.2) == pytest.approx(0.5 / 2.3)

    def test_report(self):
        r = verify_theorem2()
        assert r.status == "pass"
        assert r.measured["max_oscillation_residual"] <= 1e-10
        assert r.measured["stationary_points"][1] == pytest.approx(1 / 1.2)
        for row in r.measured["runs"]:
            assert row["stationary_margin"] > 0
            assert row["proxquant_min_grad"] <= 1e-6
            assert row["lazy_min_grad"] >= row["grad_floor"] * (1 - 1e-9)


class TestTheorem3:
    def test_unique_fixed_point(self):
        r = verify_theorem3(shifted_quadratic([2, -3]), horizon=2000)
        assert r.status == "pass"
        assert r.measured["fixed_points"] == [[1.0, -1.0]]

    @pytest.mark.parametrize("which", [1, -1])
    def test_toy_has_none(self, which):
        r = verify_theorem3(toy_pair(which), horizon=2000)
        assert r.status == "pass"
        assert r.measured["fixed_points"] == []
        assert r.measured["longest_constant_run"] < 1000

    def test_zero_gradient_is_vacuous(self):
        obj = shifted_quadratic([1.0, -1.0])
        assert fixed_point_condition(obj, np.array([1.0, -1.0]))

    def test_slow_drift_is_inconclusive(self):
        obj = shifted_quadratic([1 - 1e-6])
        r = verify_theorem3(obj, candidates=[[1.0]], horizon=1000)
        assert r.status == "inconclusive" and r.passed
        assert r.warnings

    def test_large_dimension_needs_candidates(self):
        obj = Objective(17, lambda th, b=None: (0.0, np.zeros(17)))
        with pytest.raises(DimensionError):
            verify_theorem3(obj)


class TestRegistry:
    def test_names(self):
        assert set(REGISTRY) == {"toy_failure", "theorem1", "theorem2", "theorem3"}

    def test_unknown(self):
        with pytest.raises(KeyError):
            run_named("theorem9")

    def test_report_is_json(self):
        (r,) = run_named("theorem2")
        json.dumps(r.to_dict())
