"""
Streaming stopping rule.

A :class:`Monitor` consumes one p-value per decision point. Point ``t`` is a
hit when ``p_t <= delta_t``; hits accumulate over the whole stream and the
test stops with a significant result at the first ``t`` where the hit count
reaches ``r_t``. Thresholds are recomputed from the plan's closed forms on
demand, so streams may be unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .errors import DomainError, MonitorStoppedError, PlanError
from .plan import Finding, TestPlan, validate_plan

__all__ = ["Continue", "StopSignificant", "Decision", "Monitor", "new_monitor", "run_stream", "stop_time"]


@dataclass(frozen=True)
class Continue:
    """Keep collecting data.

    ``delta_t`` and ``r_t`` belong to the point just observed; ``next_delta``
    and ``next_r`` are what the following observation will be held to.
    """

    t: int
    hits: int
    r_t: int
    delta_t: float
    next_delta: float | None = None
    next_r: int | None = None
    exhausted: bool = False

    name = "continue"


@dataclass(frozen=True)
class StopSignificant:
    """End the test: ``hits >= r_t`` at decision point ``t``."""

    t: int
    hits: int
    r_t: int
    delta_t: float

    name = "stop_significant"


Decision = Union[Continue, StopSignificant]


class Monitor:
    """Single-stream mutable state of the stopping rule.

    Attributes:
        plan: The test plan being monitored.
        t: Number of decision points observed so far.
        hits: Number of observed points with ``p_k <= delta_k``.
        stopped_at: Decision point of the stop, or None while running.
        findings: Non-fatal validation findings for the plan.
    """

    def __init__(self, plan: TestPlan, findings: list[Finding] | None = None):
        self.plan = plan
        self.t = 0
        self.hits = 0
        self.stopped_at: int | None = None
        self.findings = list(findings or [])

    @property
    def running(self) -> bool:
        return self.stopped_at is None

    @property
    def status(self) -> str:
        return "running" if self.running else f"stopped at t={self.stopped_at}"

    def observe(self, p: float) -> Decision:
        """Consume the p-value of the next decision point.

        Raises:
            MonitorStoppedError: If the monitor has already stopped. The
                state is left unchanged.
            DomainError: If ``p`` is not in ``[0, 1]``.
        """
        if not self.running:
            raise MonitorStoppedError(f"monitor already stopped at t={self.stopped_at}")
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p-value must lie in [0, 1], got {p!r}")
        t = self.t + 1
        threshold = self.plan.threshold(t)
        self.t = t
        if p <= threshold.delta:
            self.hits += 1
        if self.hits >= threshold.r:
            self.stopped_at = t
            return StopSignificant(t=t, hits=self.hits, r_t=threshold.r, delta_t=threshold.delta)
        upcoming = self.plan.threshold(t + 1)
        return Continue(
            t=t,
            hits=self.hits,
            r_t=threshold.r,
            delta_t=threshold.delta,
            next_delta=upcoming.delta,
            next_r=upcoming.r,
            exhausted=threshold.exhausted,
        )

    def __repr__(self) -> str:
        return f"Monitor(t={self.t}, hits={self.hits}, {self.status})"


def new_monitor(plan: TestPlan) -> Monitor:
    """Start a monitor at ``t = 0``; warnings from validation ride along in ``findings``.

    Raises:
        PlanError: If validation reports any error.
    """
    findings = validate_plan(plan)
    errors = [f for f in findings if f.level == "error"]
    if errors:
        raise PlanError("; ".join(str(f) for f in errors))
    return Monitor(plan, findings)


def run_stream(plan: TestPlan, ps: Iterable[float]) -> tuple[Decision, Monitor]:
    """Feed ``ps`` through a fresh monitor until it stops or the stream ends.

    Returns:
        The last decision and the monitor. An empty stream yields
        ``Continue(t=0, hits=0, r_t=0, delta_t=0.0)`` carrying the first
        point's threshold as ``next_delta``/``next_r``.
    """
    monitor = Monitor(plan)
    first = plan.threshold(1)
    decision: Decision = Continue(t=0, hits=0, r_t=0, delta_t=0.0, next_delta=first.delta, next_r=first.r)
    for p in ps:
        decision = monitor.observe(p)
        if isinstance(decision, StopSignificant):
            break
    return decision, monitor


def stop_time(plan: TestPlan, ps: Iterable[float]) -> int | None:
    """Decision point at which ``ps`` stops the test, or None."""
    decision, _ = run_stream(plan, ps)
    return decision.t if isinstance(decision, StopSignificant) else None

