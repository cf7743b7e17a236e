import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repsig.errors import DomainError, MonitorStoppedError, PlanError
from repsig.monitor import Continue, Monitor, StopSignificant, new_monitor, run_stream, stop_time
from repsig.plan import ConstantPolicy, CustomPolicy, FractionPolicy, TestPlan
from repsig.spending import CustomSchedule, GeometricSchedule, PSeriesSchedule


def brute_stop(deltas, rs, ps):
    """Independent oracle: min{t : #{k <= t : p_k <= delta_k} >= r_t}."""
    for t in range(1, len(ps) + 1):
        if sum(ps[k] <= deltas[k] for k in range(t)) >= rs[t - 1]:
            return t
    return None


PLAN = TestPlan(GeometricSchedule(0.05, 0.01), FractionPolicy(0.1))


class TestMonitor:
    def test_stops_on_first_hit_with_r_one(self):
        m = Monitor(PLAN)
        assert isinstance(m.observe(0.9), Continue)
        d = m.observe(1e-9)
        assert isinstance(d, StopSignificant) and d.t == 2 and d.hits == 1
        assert m.status == "stopped at t=2"

    def test_continue_reports_next_threshold(self):
        d = Monitor(PLAN).observe(0.5)
        assert d.delta_t == PLAN.threshold_at(1)
        assert d.next_delta == PLAN.threshold_at(2)
        assert d.next_r == PLAN.r_at(2)
        assert d.name == "continue"

    def test_hit_is_inclusive(self):
        plan = TestPlan(CustomSchedule((0.05,), 0.05), ConstantPolicy(1))
        assert isinstance(Monitor(plan).observe(0.05), StopSignificant)

    def test_observe_after_stop(self):
        m = Monitor(PLAN)
        m.observe(0.0)
        with pytest.raises(MonitorStoppedError):
            m.observe(0.5)
        assert m.t == 1

    @pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
    def test_bad_p(self, p):
        with pytest.raises(DomainError):
            Monitor(PLAN).observe(p)

    def test_needs_r_hits(self):
        plan = TestPlan(PSeriesSchedule(0.05, 1.2), CustomPolicy((1, 2)))
        m = Monitor(plan)
        assert isinstance(m.observe(0.9), Continue)
        assert isinstance(m.observe(0.0), Continue)
        assert isinstance(m.observe(0.0), StopSignificant)

    def test_exhausted_budget_never_stops(self):
        plan = TestPlan(CustomSchedule((0.01,), 0.05), ConstantPolicy(1))
        decision, monitor = run_stream(plan, [0.5] + [1e-300] * 50)
        assert isinstance(decision, Continue) and decision.t == 51 and monitor.hits == 0

    def test_empty_stream(self):
        decision, monitor = run_stream(PLAN, [])
        assert decision == Continue(t=0, hits=0, r_t=0, delta_t=0.0, next_delta=PLAN.threshold_at(1), next_r=1)
        assert monitor.running

    def test_new_monitor_carries_findings(self):
        assert [f.code for f in new_monitor(PLAN).findings] == ["budget_exhausted"]

    def test_new_monitor_rejects_error_findings(self, monkeypatch):
        from repsig import monitor as mod
        from repsig.plan import Finding

        monkeypatch.setattr(mod, "validate_plan", lambda plan: [Finding("error", "x", "bad")])
        with pytest.raises(PlanError):
            new_monitor(PLAN)

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_matches_brute_force(self, data):
        n = data.draw(st.integers(1, 60))
        u = data.draw(st.sampled_from([0.05, 0.2, 0.5, 1.0]))
        plan = TestPlan(GeometricSchedule(0.3, 0.05), FractionPolicy(u))
        ps = data.draw(st.lists(st.sampled_from([0.0, 1e-4, 1e-3, 0.01, 0.5, 1.0]), min_size=n, max_size=n))
        deltas = [plan.threshold_at(t) for t in range(1, n + 1)]
        rs = [plan.r_at(t) for t in range(1, n + 1)]
        assert stop_time(plan, ps) == brute_stop(deltas, rs, ps)
