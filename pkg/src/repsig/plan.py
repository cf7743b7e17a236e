"""
Test plans: a spending schedule paired with a repetition policy.

At decision point ``t`` the plan's significance threshold is
``delta_t = alpha_t * r_t``: the spent budget multiplied by the number of
significant decision points the policy requires before stopping. Summing
``delta_t / r_t`` then recovers the spent budget, which is what keeps the
overall type 1 error at or below ``alpha``.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import BudgetExhaustedError, DomainError, PlanError, RepsigError
from .numeric import two_sided_z
from .spending import (
    CustomSchedule,
    GeometricSchedule,
    SpendingSchedule,
    _check_t,
    schedule_from_dict,
)

__all__ = [
    "RepetitionPolicy",
    "FractionPolicy",
    "ConstantPolicy",
    "CustomPolicy",
    "policy_from_dict",
    "Threshold",
    "TestPlan",
    "min_z_threshold",
    "plan_from_dict",
    "load_plan",
    "Finding",
    "validate_plan",
    "baseline_z",
    "iter_chunks",
]


class RepetitionPolicy(ABC):
    """Nondecreasing number ``r_t >= 1`` of significant points required to stop at ``t``."""

    @abstractmethod
    def r_at(self, t: int) -> int: ...

    @abstractmethod
    def r_array(self, ts: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...


@dataclass(frozen=True)
class FractionPolicy(RepetitionPolicy):
    """``r_t = ceil(u t)``: at least a fraction ``u`` of the points so far.

    ``u`` is read as the decimal number it prints as, so ``u=0.1`` gives
    ``r_30 = 3`` rather than the 4 that binary rounding of ``0.1 * 30``
    would produce.
    """

    u: float
    _ratio: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.u, bool):
            raise PlanError("u must be a number")
        u = float(self.u)
        if not 0.0 < u <= 1.0:
            raise PlanError(f"fraction u must lie in (0, 1], got {self.u!r}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "_ratio", Fraction(repr(u)))

    def r_at(self, t: int) -> int:
        t = _check_t(t)
        num, den = self._ratio.numerator, self._ratio.denominator
        return -((-num * t) // den)

    def r_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.int64)
        num, den = self._ratio.numerator, self._ratio.denominator
        if ts.size and num * int(ts.max()) < 2**62:
            return -((-num * ts) // den)
        return np.array([-((-num * int(t)) // den) for t in ts], dtype=np.int64)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "fraction", "u": self.u}


@dataclass(frozen=True)
class ConstantPolicy(RepetitionPolicy):
    """Require the same number ``r`` of significant points at every decision point."""

    r: int

    def __post_init__(self):
        if isinstance(self.r, bool) or int(self.r) != self.r or self.r < 1:
            raise PlanError(f"constant repetition r must be a positive integer, got {self.r!r}")
        object.__setattr__(self, "r", int(self.r))

    def r_at(self, t: int) -> int:
        _check_t(t)
        return self.r

    def r_array(self, ts: np.ndarray) -> np.ndarray:
        return np.full(np.shape(ts), self.r, dtype=np.int64)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "constant", "r": self.r}


@dataclass(frozen=True)
class CustomPolicy(RepetitionPolicy):
    """Explicit nondecreasing requirements; the last value repeats forever."""

    values: tuple[int, ...]

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise PlanError("custom policy needs at least one value")
        for i, r in enumerate(values, start=1):
            if isinstance(r, bool) or int(r) != r or r < 1:
                raise PlanError(f"custom policy value at t={i} must be a positive integer, got {r!r}")
        values = tuple(int(r) for r in values)
        for i in range(1, len(values)):
            if values[i] < values[i - 1]:
                raise PlanError(
                    f"custom policy must be nondecreasing; r_{i + 1}={values[i]} < r_{i}={values[i - 1]}"
                )
        object.__setattr__(self, "values", values)

    def r_at(self, t: int) -> int:
        t = _check_t(t)
        return self.values[min(t, len(self.values)) - 1]

    def r_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.int64)
        table = np.asarray(self.values, dtype=np.int64)
        return table[np.minimum(ts, len(table)) - 1]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "custom", "values": list(self.values)}


def policy_from_dict(d: Mapping[str, Any]) -> RepetitionPolicy:
    """Build a policy from ``{"kind": "fraction"|"constant"|"custom", ...}``."""
    if not isinstance(d, Mapping):
        raise PlanError("policy must be a JSON object")
    kind = d.get("kind")
    expected = {"fraction": "u", "constant": "r", "custom": "values"}
    if kind not in expected:
        raise PlanError(f"unknown policy kind {kind!r}; expected one of {sorted(expected)}")
    extra = set(d) - {"kind", expected[kind]}
    if extra:
        raise PlanError(f"unknown fields for {kind} policy: {sorted(extra)}")
    if expected[kind] not in d:
        raise PlanError(f"missing field {expected[kind]!r} for {kind} policy")
    value = d[expected[kind]]
    if kind == "fraction":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise PlanError("'u' must be a number")
        return FractionPolicy(u=value)
    if kind == "constant":
        if not isinstance(value, int) or isinstance(value, bool):
            raise PlanError("'r' must be an integer")
        return ConstantPolicy(r=value)
    if not isinstance(value, list) or not all(isinstance(r, int) and not isinstance(r, bool) for r in value):
        raise PlanError("'values' must be a list of integers")
    return CustomPolicy(values=tuple(value))


class Threshold(NamedTuple):
    """Threshold at one decision point plus its diagnostic flags."""

    t: int
    delta: float
    r: int
    clamped: bool
    exhausted: bool


@dataclass(frozen=True)
class TestPlan:
    """Spending schedule + repetition policy, with thresholds ``delta_t = alpha_t r_t``."""

    __test__ = False  # not a pytest class

    schedule: SpendingSchedule
    policy: RepetitionPolicy

    @property
    def alpha(self) -> float:
        return self.schedule.alpha

    def r_at(self, t: int) -> int:
        return self.policy.r_at(t)

    def alpha_at(self, t: int) -> float:
        return self.schedule.alpha_at(t)

    def threshold(self, t: int) -> Threshold:
        r = self.policy.r_at(t)
        raw = self.schedule.alpha_at(t) * r
        return Threshold(
            t=t,
            delta=min(raw, 1.0),
            r=r,
            clamped=raw > 1.0,
            exhausted=self.schedule.exhausted_at(t),
        )

    def threshold_at(self, t: int) -> float:
        """``delta_t``, clamped to at most 1."""
        return self.threshold(t).delta

    def z_threshold_at(self, t: int) -> float:
        """Two-sided Z score equivalent of ``delta_t``.

        Raises:
            BudgetExhaustedError: If ``delta_t`` is 0 at double precision.
        """
        delta = self.threshold_at(t)
        if delta == 0.0:
            raise BudgetExhaustedError(t)
        return two_sided_z(delta)

    def thresholds(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized ``(delta_t, r_t)`` for an array of decision points."""
        ts = np.asarray(ts, dtype=np.int64)
        rs = self.policy.r_array(ts)
        deltas = np.minimum(self.schedule.alpha_array(ts) * rs, 1.0)
        return deltas, rs

    def to_dict(self) -> dict[str, Any]:
        return {"schedule": self.schedule.to_dict(), "policy": self.policy.to_dict()}


def plan_from_dict(d: Mapping[str, Any]) -> TestPlan:
    """Build a plan from ``{"schedule": {...}, "policy": {...}}``."""
    if not isinstance(d, Mapping):
        raise PlanError("plan must be a JSON object")
    extra = set(d) - {"schedule", "policy"}
    if extra:
        raise PlanError(f"unknown plan fields: {sorted(extra)}")
    for key in ("schedule", "policy"):
        if key not in d:
            raise PlanError(f"plan is missing {key!r}")
    return TestPlan(schedule_from_dict(d["schedule"]), policy_from_dict(d["policy"]))


def load_plan(source: str) -> TestPlan:
    """Parse a plan from inline JSON text or from a path to a JSON file."""
    text = source.strip()
    if not text.startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise PlanError(f"cannot read plan file {source!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanError(f"invalid plan JSON: {exc}") from exc
    return plan_from_dict(data)


def iter_chunks(plan: TestPlan, start: int, stop: int, size: int = 1 << 16) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(ts, deltas, rs)`` blocks covering decision points ``start..stop`` inclusive."""
    lo = start
    while lo <= stop:
        hi = min(stop, lo + size - 1)
        ts = np.arange(lo, hi + 1, dtype=np.int64)
        deltas, rs = plan.thresholds(ts)
        yield ts, deltas, rs
        lo = hi + 1


@dataclass(frozen=True)
class Finding:
    """One validation result. ``level`` is ``"error"``, ``"warning"`` or ``"info"``."""

    level: str
    code: str
    message: str
    t: int | None = None

    def __str__(self) -> str:
        return f"{self.level}: {self.code}: {self.message}"


def validate_plan(plan: TestPlan | Mapping[str, Any], scan_horizon: int = 100_000) -> list[Finding]:
    """Check a plan (or its JSON dict form) and report findings as data.

    Construction problems in a dict (divergent p-series, ``u`` outside
    ``(0, 1]``, malformed fields) come back as ``error`` findings. For a
    built plan the thresholds over ``1..scan_horizon`` are scanned for
    clamping at 1, and the point where the budget underflows to zero is
    reported when the schedule has one.
    """
    if not isinstance(plan, TestPlan):
        try:
            plan = plan_from_dict(plan)
        except RepsigError as exc:
            code = "divergent_series" if "divergent series" in str(exc) else "invalid_plan"
            return [Finding("error", code, str(exc))]

    findings: list[Finding] = []
    schedule = plan.schedule
    horizon = scan_horizon
    if isinstance(schedule, CustomSchedule):
        horizon = max(horizon, len(schedule.values))
    for ts, _, rs in iter_chunks(plan, 1, horizon):
        raw = schedule.alpha_array(ts) * rs
        over = np.flatnonzero(raw > 1.0)
        if over.size:
            t = int(ts[over[0]])
            findings.append(Finding(
                "warning", "clamped",
                f"delta_t = alpha_t * r_t = {raw[over[0]]:.6g} exceeds 1 and is clamped to 1 "
                f"(first at t={t}); such points are always significant",
                t,
            ))
            break

    if isinstance(schedule, GeometricSchedule):
        t = schedule.exhaustion_horizon()
        findings.append(Finding(
            "info", "budget_exhausted",
            f"alpha_t underflows to 0 from t={t}; thresholds are 0 from there on",
            t,
        ))
    elif isinstance(schedule, CustomSchedule):
        t = len(schedule.values) + 1
        findings.append(Finding(
            "info", "finite_schedule",
            f"custom schedule spends nothing from t={t}; thresholds are 0 from there on",
            t,
        ))
    return findings


def baseline_z(t: int, rho: float, alpha: float) -> float:
    """Z score boundary of the always-valid method built on autocorrelation among averages.

    ``sqrt(2 (t rho^2 + 1) / (t rho^2) * ln(sqrt(t rho^2 + 1) / alpha))``;
    depends on ``t`` and ``rho`` only through ``t rho^2``.
    """
    if isinstance(t, bool) or int(t) != t or t < 1:
        raise DomainError(f"t must be a positive integer, got {t!r}")
    if not rho > 0.0 or not math.isfinite(rho):
        raise DomainError(f"rho must be positive, got {rho!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    x = t * rho * rho
    return math.sqrt(2.0 * (x + 1.0) / x * math.log(math.sqrt(x + 1.0) / alpha))


def min_z_threshold(plan: TestPlan, horizon: int) -> tuple[int, float]:
    """Decision point in ``1..horizon`` with the lowest Z threshold, and that Z.

    The largest ``delta_t`` gives the lowest Z; ties go to the earliest point.
    """
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
        raise DomainError(f"horizon must be a positive integer, got {horizon!r}")
    best_t, best_delta = 1, -1.0
    for ts, deltas, _ in iter_chunks(plan, 1, int(horizon)):
        i = int(np.argmax(deltas))
        if deltas[i] > best_delta:
            best_t, best_delta = int(ts[i]), float(deltas[i])
    if best_delta <= 0.0:
        raise BudgetExhaustedError(best_t)
    return best_t, two_sided_z(best_delta)
