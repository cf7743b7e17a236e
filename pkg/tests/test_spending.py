import math

import mpmath
import numpy as np
import pytest

from repsig.errors import DivergentSeriesError, PlanError
from repsig.spending import (
    CustomSchedule,
    GeometricSchedule,
    HeadlessPSeriesSchedule,
    PSeriesSchedule,
    schedule_from_dict,
)


class TestGeometric:
    def test_terms(self):
        s = GeometricSchedule(0.05, 0.1)
        for t in (1, 2, 10, 100):
            assert s.alpha_at(t) == pytest.approx(0.1 * 0.9 ** (t - 1) * 0.05, rel=1e-13)

    def test_ratio_exact_for_tiny_w(self):
        s = GeometricSchedule(0.05, 1e-9)
        assert s.alpha_at(2) / s.alpha_at(1) == pytest.approx(1 - 1e-9, rel=1e-15)

    def test_sums(self):
        s = GeometricSchedule(0.05, 0.01)
        direct = math.fsum(s.alpha_at(t) for t in range(1, 501))
        assert s.partial_sum(500) == pytest.approx(direct, rel=1e-12)
        assert s.partial_sum(500) + s.tail_sum(500) == pytest.approx(0.05, rel=1e-14)
        assert s.tail_sum(0) == 0.05
        assert s.total_alpha() == 0.05

    def test_vectorized_matches_scalar(self):
        s = GeometricSchedule(0.05, 0.003)
        ts = np.array([1, 7, 1000, 123456])
        assert np.allclose(s.alpha_array(ts), [s.alpha_at(int(t)) for t in ts], rtol=1e-12, atol=0)

    def test_exhaustion(self):
        s = GeometricSchedule(0.05, 0.5)
        t = s.exhaustion_horizon()
        assert s.alpha_at(t) == 0.0 and s.alpha_at(t - 1) > 0.0
        assert s.exhausted_at(t) and not s.exhausted_at(1)

    def test_large_t_is_cheap(self):
        assert GeometricSchedule(0.05, 1e-9).alpha_at(10**9) > 0.0

    @pytest.mark.parametrize("w", [0.0, 1.0, -0.1, 2.0])
    def test_bad_w(self, w):
        with pytest.raises(PlanError):
            GeometricSchedule(0.05, w)

    @pytest.mark.parametrize("alpha", [0.0, -0.05, 1.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(PlanError):
            GeometricSchedule(alpha, 0.1)


class TestPSeries:
    @pytest.mark.parametrize("v", [1.0001, 1.1, 1.2, 2.0])
    def test_terms_against_mpmath(self, v):
        s = PSeriesSchedule(0.05, v)
        for t in (1, 2, 100, 10**6):
            expected = float(mpmath.mpf(0.05) / (mpmath.zeta(v) * mpmath.mpf(t) ** v))
            assert s.alpha_at(t) == pytest.approx(expected, rel=1e-12)

    def test_sums_close(self):
        s = PSeriesSchedule(0.05, 1.2)
        assert s.partial_sum(1000) + s.tail_sum(1000) == pytest.approx(0.05, rel=1e-13)
        assert s.partial_sum(50) == pytest.approx(math.fsum(s.alpha_at(t) for t in range(1, 51)), rel=1e-13)

    @pytest.mark.parametrize("v", [1.0, 0.9, 0.0])
    def test_divergent(self, v):
        with pytest.raises(DivergentSeriesError):
            PSeriesSchedule(0.05, v)


class TestHeadless:
    def test_s_zero_is_plain_pseries(self):
        plain, headless = PSeriesSchedule(0.05, 1.1), HeadlessPSeriesSchedule(0.05, 1.1, 0)
        for t in (1, 2, 3, 1000, 10**8):
            assert plain.alpha_at(t) == headless.alpha_at(t)

    def test_against_mpmath(self):
        s = HeadlessPSeriesSchedule(0.05, 1.1, 100)
        norm = mpmath.zeta(1.1, 101)
        for t in (1, 50, 10**5):
            expected = float(mpmath.mpf(0.05) / (norm * mpmath.mpf(t + 100) ** 1.1))
            assert s.alpha_at(t) == pytest.approx(expected, rel=1e-12)

    def test_flatter_than_plain(self):
        plain, headless = PSeriesSchedule(0.05, 1.1), HeadlessPSeriesSchedule(0.05, 1.1, 100)
        assert headless.alpha_at(1) < plain.alpha_at(1)
        assert headless.alpha_at(1) / headless.alpha_at(2) < plain.alpha_at(1) / plain.alpha_at(2)

    def test_sums_close(self):
        s = HeadlessPSeriesSchedule(0.05, 1.1, 100)
        assert s.partial_sum(5000) + s.tail_sum(5000) == pytest.approx(0.05, rel=1e-12)

    @pytest.mark.parametrize("s", [-1, 1.5])
    def test_bad_s(self, s):
        with pytest.raises(PlanError):
            HeadlessPSeriesSchedule(0.05, 1.1, s)


class TestCustom:
    def test_zero_past_end(self):
        s = CustomSchedule((0.03, 0.02), 0.05)
        assert [s.alpha_at(t) for t in (1, 2, 3, 100)] == [0.03, 0.02, 0.0, 0.0]
        assert list(s.alpha_array(np.array([1, 2, 3]))) == [0.03, 0.02, 0.0]
        assert s.tail_sum(1) == 0.02 and s.tail_sum(5) == 0.0

    def test_overspend_rejected(self):
        with pytest.raises(PlanError):
            CustomSchedule((0.03, 0.03), 0.05)

    def test_negative_rejected(self):
        with pytest.raises(PlanError):
            CustomSchedule((0.03, -0.01), 0.05)


class TestFromDict:
    @pytest.mark.parametrize("schedule", [
        GeometricSchedule(0.05, 0.01),
        PSeriesSchedule(0.05, 1.2),
        HeadlessPSeriesSchedule(0.05, 1.1, 100),
        CustomSchedule((0.01, 0.02), 0.05),
    ])
    def test_round_trip(self, schedule):
        assert schedule_from_dict(schedule.to_dict()) == schedule

    @pytest.mark.parametrize("d", [
        {"kind": "nope"},
        {"kind": "geometric", "alpha": 0.05},
        {"kind": "geometric", "alpha": 0.05, "w": 0.1, "extra": 1},
        {"kind": "geometric", "alpha": "0.05", "w": 0.1},
        {"kind": "headless_pseries", "alpha": 0.05, "v": 1.1, "s": 1.5},
        {"kind": "custom", "alpha": 0.05, "values": "0.05"},
    ])
    def test_rejects(self, d):
        with pytest.raises(PlanError):
            schedule_from_dict(d)

    def test_divergent_from_dict(self):
        with pytest.raises(DivergentSeriesError):
            schedule_from_dict({"kind": "pseries", "alpha": 0.05, "v": 1.0})
