import json
import math

import numpy as np
import pytest

from repsig.errors import BudgetExhaustedError, PlanError
from repsig.numeric import two_sided_z
from repsig.plan import (
    ConstantPolicy,
    CustomPolicy,
    FractionPolicy,
    TestPlan,
    baseline_z,
    load_plan,
    min_z_threshold,
    plan_from_dict,
    policy_from_dict,
    validate_plan,
)
from repsig.spending import CustomSchedule, GeometricSchedule, PSeriesSchedule


class TestPolicies:
    @pytest.mark.parametrize("u, t, r", [(0.1, 1, 1), (0.1, 10, 1), (0.1, 11, 2), (0.1, 30, 3), (0.5, 3, 2), (1.0, 7, 7), (0.3, 10, 3)])
    def test_fraction_ceiling_is_exact(self, u, t, r):
        assert FractionPolicy(u).r_at(t) == r

    def test_fraction_vectorized(self):
        p = FractionPolicy(0.07)
        ts = np.arange(1, 2000)
        assert p.r_array(ts).tolist() == [p.r_at(int(t)) for t in ts]

    @pytest.mark.parametrize("u", [0.0, -0.1, 1.1])
    def test_fraction_bad_u(self, u):
        with pytest.raises(PlanError):
            FractionPolicy(u)

    def test_custom_repeats_last(self):
        p = CustomPolicy((1, 1, 2, 3))
        assert [p.r_at(t) for t in range(1, 7)] == [1, 1, 2, 3, 3, 3]

    @pytest.mark.parametrize("values", [(2, 1), (0, 1), ()])
    def test_custom_rejects(self, values):
        with pytest.raises(PlanError):
            CustomPolicy(values)

    @pytest.mark.parametrize("policy", [FractionPolicy(0.1), ConstantPolicy(3), CustomPolicy((1, 2, 2))])
    def test_round_trip(self, policy):
        assert policy_from_dict(policy.to_dict()) == policy


class TestThresholds:
    def test_delta_is_alpha_times_r(self):
        plan = TestPlan(GeometricSchedule(0.05, 0.01), FractionPolicy(0.1))
        for t in (1, 15, 300):
            th = plan.threshold(t)
            assert th.delta == plan.alpha_at(t) * plan.r_at(t)
            assert not th.clamped

    def test_single_point_plan(self):
        plan = TestPlan(CustomSchedule((0.05,), 0.05), ConstantPolicy(1))
        assert plan.z_threshold_at(1) == pytest.approx(1.959963984540054, abs=1e-12)
        with pytest.raises(BudgetExhaustedError):
            plan.z_threshold_at(2)

    def test_clamp(self):
        plan = TestPlan(CustomSchedule((0.5, 0.5), 1.0), ConstantPolicy(3))
        th = plan.threshold(1)
        assert th.delta == 1.0 and th.clamped
        assert [f.code for f in validate_plan(plan)][0] == "clamped"

    def test_vectorized_matches_scalar(self):
        plan = TestPlan(PSeriesSchedule(0.05, 1.2), FractionPolicy(0.1))
        ts = np.array([1, 2, 9, 10, 11, 1000, 10**7])
        deltas, rs = plan.thresholds(ts)
        for t, d, r in zip(ts, deltas, rs):
            assert d == pytest.approx(plan.threshold_at(int(t)), rel=1e-15)
            assert r == plan.r_at(int(t))

    def test_min_z_geometric_near_closed_form(self):
        plan = TestPlan(GeometricSchedule(0.05, 1e-3), FractionPolicy(0.1))
        t, z = min_z_threshold(plan, 10**4)
        assert 900 < t < 1100
        assert z == pytest.approx(two_sided_z(0.05 * 0.1 / math.e), abs=0.01)


class TestSerialization:
    def test_load_inline_and_file(self, tmp_path):
        plan = TestPlan(GeometricSchedule(0.05, 0.01), FractionPolicy(0.1))
        text = json.dumps(plan.to_dict())
        assert load_plan(text) == plan
        path = tmp_path / "plan.json"
        path.write_text(text)
        assert load_plan(str(path)) == plan

    @pytest.mark.parametrize("source", ["{not json", "/does/not/exist.json", '{"schedule": {}}'])
    def test_load_errors(self, source):
        with pytest.raises(PlanError):
            load_plan(source)

    def test_unknown_plan_field(self):
        with pytest.raises(PlanError):
            plan_from_dict({"schedule": {}, "policy": {}, "x": 1})


class TestValidate:
    def test_divergent_dict(self):
        findings = validate_plan({"schedule": {"kind": "pseries", "alpha": 0.05, "v": 1.0}, "policy": {"kind": "constant", "r": 1}})
        assert [(f.level, f.code) for f in findings] == [("error", "divergent_series")]

    def test_invalid_dict(self):
        findings = validate_plan({"schedule": {"kind": "pseries", "alpha": 0.05, "v": 1.2}, "policy": {"kind": "fraction", "u": 2}})
        assert [(f.level, f.code) for f in findings] == [("error", "invalid_plan")]

    def test_clean_pseries(self):
        assert validate_plan(TestPlan(PSeriesSchedule(0.05, 1.2), FractionPolicy(0.1))) == []

    def test_geometric_reports_exhaustion(self):
        findings = validate_plan(TestPlan(GeometricSchedule(0.05, 0.5), FractionPolicy(0.1)))
        assert [(f.level, f.code) for f in findings] == [("info", "budget_exhausted")]


class TestBaseline:
    def test_formula(self):
        x = 4 * 0.5**2
        expected = math.sqrt(2 * (x + 1) / x * math.log(math.sqrt(x + 1) / 0.05))
        assert baseline_z(4, 0.5, 0.05) == pytest.approx(expected, rel=1e-15)

    def test_depends_on_t_rho_squared_only(self):
        assert baseline_z(400, 0.1, 0.05) == pytest.approx(baseline_z(4, 1.0, 0.05), rel=1e-13)

    def test_minimum_near_three(self):
        zs = [baseline_z(t, 0.1, 0.05) for t in range(1, 20000)]
        assert min(zs) == pytest.approx(3.035, abs=0.005)
