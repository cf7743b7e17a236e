"""Exception types raised across the package."""


class RepsigError(Exception):
    """Base class for all package errors."""


class DomainError(RepsigError, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergentSeriesError(DomainError):
    """A spending series with exponent v <= 1 cannot sum to a finite budget."""

    def __init__(self, v: float):
        super().__init__(f"divergent series: p-series exponent v={v!r} must exceed 1")
        self.v = v


class DegenerateThresholdError(DomainError):
    """A zero probability has no finite Z score."""

    def __init__(self, message: str = "degenerate threshold: p = 0 has no finite Z score"):
        super().__init__(message)


class PlanError(RepsigError, ValueError):
    """A schedule, policy or plan description is invalid."""


class BudgetExhaustedError(RepsigError, ArithmeticError):
    """The threshold at decision point ``t`` is zero at double precision."""

    def __init__(self, t: int):
        super().__init__(f"budget exhausted: delta_t underflows to 0 at t={t}")
        self.t = t


class MonitorStoppedError(RepsigError, RuntimeError):
    """An observation was offered to a monitor that has already stopped."""
