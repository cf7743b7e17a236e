"""
Alpha-spending schedules.

A schedule hands out a nonnegative budget ``alpha_t`` to every decision
point ``t = 1, 2, ...`` such that the budgets sum to at most the total
type 1 error budget ``alpha``. The infinite families are closed-form
generators and are never materialized, so ``t`` may run to 1e9 and beyond.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DivergentSeriesError, PlanError
from .numeric import pseries_head, pseries_tail, zeta

__all__ = [
    "SpendingSchedule",
    "GeometricSchedule",
    "PSeriesSchedule",
    "HeadlessPSeriesSchedule",
    "CustomSchedule",
    "schedule_from_dict",
]

# Sums of the custom schedule may exceed alpha by at most this much.
SUM_TOLERANCE = 1e-12


def _check_t(t: int) -> int:
    if isinstance(t, bool) or int(t) != t or t < 1:
        raise ValueError(f"decision point t must be a positive integer, got {t!r}")
    return int(t)


def _check_alpha(alpha: float) -> float:
    if isinstance(alpha, bool):
        raise PlanError("alpha must be a number")
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise PlanError(f"alpha must lie in (0, 1], got {alpha!r}")
    return alpha


def _check_exponent(v: float) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise PlanError(f"exponent v must be finite, got {v!r}")
    if v <= 1.0:
        raise DivergentSeriesError(v)
    return v


class SpendingSchedule(ABC):
    """Per-decision-point share of the type 1 error budget."""

    alpha: float

    @abstractmethod
    def alpha_at(self, t: int) -> float:
        """Budget ``alpha_t`` for decision point ``t >= 1``."""

    @abstractmethod
    def alpha_array(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`alpha_at` over an integer array of decision points."""

    @abstractmethod
    def partial_sum(self, T: int) -> float:
        """``sum_{t=1..T} alpha_t``."""

    @abstractmethod
    def tail_sum(self, T: int) -> float:
        """``sum_{t > T} alpha_t``, the budget left after decision point ``T``."""

    @abstractmethod
    def total_alpha(self) -> float:
        """Analytic ``sum_t alpha_t``."""

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description, inverse of :func:`schedule_from_dict`."""

    def exhausted_at(self, t: int) -> bool:
        """True if the closed-form ``alpha_t`` is positive but underflows to 0."""
        return False


@dataclass(frozen=True)
class GeometricSchedule(SpendingSchedule):
    """Spend fraction ``w`` of the remaining budget at every decision point.

    ``alpha_t = w (1 - w)^(t - 1) alpha``. Terms are evaluated in the log
    domain so that the ratio between consecutive terms is exactly ``1 - w``
    up to rounding of the exponential, even for tiny ``w``.
    """

    alpha: float
    w: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        w = float(self.w)
        if not 0.0 < w < 1.0:
            raise PlanError(f"withdrawal rate w must lie in (0, 1), got {self.w!r}")
        object.__setattr__(self, "w", w)

    @property
    def _log_keep(self) -> float:
        return math.log1p(-self.w)

    def log_alpha_at(self, t: int) -> float:
        t = _check_t(t)
        return math.log(self.w) + (t - 1) * self._log_keep + math.log(self.alpha)

    def alpha_at(self, t: int) -> float:
        return math.exp(self.log_alpha_at(t))

    def exhausted_at(self, t: int) -> bool:
        return self.alpha_at(t) == 0.0

    def alpha_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        log0 = math.log(self.w) + math.log(self.alpha)
        return np.exp(log0 + (ts - 1.0) * self._log_keep)

    def partial_sum(self, T: int) -> float:
        T = _check_t(T)
        return -self.alpha * math.expm1(T * self._log_keep)

    def tail_sum(self, T: int) -> float:
        if T == 0:
            return self.alpha
        T = _check_t(T)
        return self.alpha * math.exp(T * self._log_keep)

    def total_alpha(self) -> float:
        return self.alpha

    def exhaustion_horizon(self) -> int:
        """First decision point at which ``alpha_t`` underflows to 0."""
        floor = math.log(math.ulp(0.0))
        log0 = math.log(self.w) + math.log(self.alpha)
        hi = max(2, int((floor - log0) / self._log_keep) + 2)
        while self.alpha_at(hi) != 0.0:
            hi *= 2
        if self.alpha_at(1) == 0.0:
            return 1
        lo = 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.alpha_at(mid) == 0.0:
                hi = mid
            else:
                lo = mid
        return hi

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "geometric", "alpha": self.alpha, "w": self.w}


@dataclass(frozen=True)
class PSeriesSchedule(SpendingSchedule):
    """``alpha_t = alpha / (zeta(v) t^v)``; valid only for ``v > 1``.

    Raises:
        DivergentSeriesError: For ``v <= 1``, where the normalizing series
            diverges and no finite budget can be split this way.
    """

    alpha: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        object.__setattr__(self, "v", _check_exponent(self.v))

    @property
    def _scale(self) -> float:
        return self.alpha / zeta(self.v)

    def alpha_at(self, t: int) -> float:
        t = _check_t(t)
        return self._scale * float(t) ** -self.v

    def alpha_array(self, ts: np.ndarray) -> np.ndarray:
        return self._scale * np.asarray(ts, dtype=np.float64) ** -self.v

    def partial_sum(self, T: int) -> float:
        T = _check_t(T)
        return self.alpha * pseries_head(T, self.v) / zeta(self.v)

    def tail_sum(self, T: int) -> float:
        return self.alpha * pseries_tail(T, self.v) / zeta(self.v)

    def total_alpha(self) -> float:
        return self.alpha

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "pseries", "alpha": self.alpha, "v": self.v}


@dataclass(frozen=True)
class HeadlessPSeriesSchedule(SpendingSchedule):
    """P-series spending with the first ``s`` terms dropped and the rest renormalized.

    ``alpha_t = alpha / ((zeta(v) - h(s, v)) (t + s)^v)``. With ``s == 0``
    this is bit-for-bit :class:`PSeriesSchedule`.
    """

    alpha: float
    v: float
    s: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        object.__setattr__(self, "v", _check_exponent(self.v))
        if isinstance(self.s, bool) or int(self.s) != self.s or self.s < 0:
            raise PlanError(f"s must be a nonnegative integer, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))

    @property
    def _norm(self) -> float:
        # zeta(v) - h(s, v), computed directly as a tail to avoid cancellation
        return pseries_tail(self.s, self.v)

    def alpha_at(self, t: int) -> float:
        t = _check_t(t)
        return self.alpha / self._norm * float(t + self.s) ** -self.v

    def alpha_array(self, ts: np.ndarray) -> np.ndarray:
        shifted = np.asarray(ts, dtype=np.float64) + self.s
        return self.alpha / self._norm * shifted ** -self.v

    def partial_sum(self, T: int) -> float:
        T = _check_t(T)
        spent = pseries_tail(self.s, self.v) - pseries_tail(self.s + T, self.v)
        return self.alpha * spent / self._norm

    def tail_sum(self, T: int) -> float:
        return self.alpha * pseries_tail(self.s + T, self.v) / self._norm

    def total_alpha(self) -> float:
        return self.alpha

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "headless_pseries", "alpha": self.alpha, "v": self.v, "s": self.s}


@dataclass(frozen=True)
class CustomSchedule(SpendingSchedule):
    """Finite hand-built schedule; ``alpha_t = 0`` past the last value."""

    values: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        values = tuple(float(x) for x in self.values)
        for i, x in enumerate(values, start=1):
            if not (math.isfinite(x) and x >= 0.0):
                raise PlanError(f"custom schedule value at t={i} must be finite and >= 0, got {x!r}")
        total = math.fsum(values)
        if total > self.alpha + SUM_TOLERANCE:
            raise PlanError(f"custom schedule spends {total!r}, more than alpha={self.alpha!r}")
        object.__setattr__(self, "values", values)

    def alpha_at(self, t: int) -> float:
        t = _check_t(t)
        return self.values[t - 1] if t <= len(self.values) else 0.0

    def alpha_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.int64)
        padded = np.concatenate([np.asarray(self.values, dtype=np.float64), [0.0]])
        return padded[np.where(ts <= len(self.values), ts - 1, len(self.values))]

    def partial_sum(self, T: int) -> float:
        T = _check_t(T)
        return math.fsum(self.values[:T])

    def tail_sum(self, T: int) -> float:
        return math.fsum(self.values[T:])

    def total_alpha(self) -> float:
        return math.fsum(self.values)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "custom", "alpha": self.alpha, "values": list(self.values)}


_FIELDS = {
    "geometric": ({"alpha", "w"}, lambda d: GeometricSchedule(alpha=d["alpha"], w=d["w"])),
    "pseries": ({"alpha", "v"}, lambda d: PSeriesSchedule(alpha=d["alpha"], v=d["v"])),
    "headless_pseries": (
        {"alpha", "v", "s"},
        lambda d: HeadlessPSeriesSchedule(alpha=d["alpha"], v=d["v"], s=d["s"]),
    ),
    "custom": ({"alpha", "values"}, lambda d: CustomSchedule(values=tuple(d["values"]), alpha=d["alpha"])),
}


def _require_numbers(d: Mapping[str, Any], keys: Sequence[str]) -> None:
    for key in keys:
        value = d[key]
        if key == "values":
            if not isinstance(value, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
            ):
                raise PlanError("'values' must be a list of numbers")
        elif key == "s":
            if not isinstance(value, int) or isinstance(value, bool):
                raise PlanError("'s' must be an integer")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise PlanError(f"{key!r} must be a number")


def schedule_from_dict(d: Mapping[str, Any]) -> SpendingSchedule:
    """Build a schedule from its JSON object form; unknown fields are rejected."""
    if not isinstance(d, Mapping):
        raise PlanError("schedule must be a JSON object")
    kind = d.get("kind")
    if kind not in _FIELDS:
        raise PlanError(f"unknown schedule kind {kind!r}; expected one of {sorted(_FIELDS)}")
    required, build = _FIELDS[kind]
    keys = set(d) - {"kind"}
    if keys - required:
        raise PlanError(f"unknown fields for {kind} schedule: {sorted(keys - required)}")
    if required - keys:
        raise PlanError(f"missing fields for {kind} schedule: {sorted(required - keys)}")
    _require_numbers(d, sorted(required))
    return build(d)
