"""
Worst-case type 1 error of a repeated-significance rule.

Given thresholds ``delta_1, delta_2, ...`` and nondecreasing requirements
``r_1 <= r_2 <= ...``, the gathering algorithm appends each ``delta_t`` to a
list ``L``; whenever ``L`` holds ``r_t`` entries it adds ``m = min L`` to the
error, subtracts ``m`` from every entry and drops the zeros. The result is
the largest type 1 error any joint distribution of the p-values can produce.

The list is a multiset of raw values with a global offset, so uniform
subtraction is O(1) and the minimum comes off a heap. Arithmetic is exact:
float inputs are converted to integers in units of 2**-k, with k the
smallest power that makes every input integral (at most 1074), and rational
inputs to units of the least common denominator. Ties, which are common and which the algorithm is
sensitive to, are therefore never broken by rounding.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .plan import TestPlan, iter_chunks

__all__ = ["AlphaEstimate", "worst_case_alpha", "estimate_alpha", "corollary_sum", "corollary_bound"]

# Every nonzero double is an integer multiple of 2**-1074.
_MAX_SHIFT = 1074


@dataclass(frozen=True)
class AlphaEstimate:
    """Truncated worst-case error: the true value lies in ``[collected, upper]``.

    ``corollary`` is the looser per-point bound ``sum_t delta_t / r_t`` over the
    same horizon plus the same beyond-horizon tail; it always dominates
    ``collected``.
    """

    collected: float | Fraction
    tail_bound: float | Fraction
    horizon: int
    corollary: float | Fraction | None = None

    @property
    def upper(self) -> float | Fraction:
        return min(self.collected + self.tail_bound, 1)

    def to_dict(self) -> dict:
        return {"collected": float(self.collected), "tail_bound": float(self.tail_bound), "horizon": self.horizon}


def _float_shift(deltas: np.ndarray) -> int:
    """Smallest k such that every entry is an integer multiple of 2**-k."""
    nonzero = deltas[deltas != 0.0]
    if nonzero.size == 0:
        return 0
    _, exps = np.frexp(nonzero)
    return int(min(_MAX_SHIFT, max(0, 53 - int(exps.min()))))


def _to_units(deltas: np.ndarray, shift: int) -> list[int]:
    mant, exps = np.frexp(deltas)
    ints = np.ldexp(mant, 53).astype(np.int64).tolist()
    shifts = (exps.astype(np.int64) - 53 + shift).tolist()
    return [m << k if k >= 0 else m >> -k for m, k in zip(ints, shifts)]


def _round_up(value: Fraction) -> float:
    f = float(value)
    if Fraction(f) < value:
        f = math.nextafter(f, math.inf)
    return f


class _Gatherer:
    """Streaming state of the gathering algorithm in integer units."""

    def __init__(self):
        self.heap: list[int] = []
        self.counts: dict[int, int] = {}
        self.size = 0
        self.offset = 0  # total gathered so far, also the zero level of raw values
        self.corollary = 0  # sum of ceil(delta_t / r_t), an upper bound in units
        self.t = 0
        self.r_prev = 1

    def feed(self, units: Iterable[int], rs: Iterable[int]) -> None:
        heap, counts = self.heap, self.counts
        size, offset, corollary = self.size, self.offset, self.corollary
        t, r_prev = self.t, self.r_prev
        push, pop = heapq.heappush, heapq.heappop
        try:
            for d, r in zip(units, rs):
                t += 1
                if r < r_prev:
                    raise DomainError(
                        f"repetition requirements must be nondecreasing; r_{t}={r} < r_{t - 1}={r_prev}"
                    )
                r_prev = r
                corollary -= (-d) // r
                raw = d + offset
                c = counts.get(raw)
                if c is None:
                    counts[raw] = 1
                    push(heap, raw)
                else:
                    counts[raw] = c + 1
                size += 1
                # With nondecreasing r the list never exceeds r_t entries, so
                # this fires exactly when L has r_t entries.
                if size >= r:
                    low = pop(heap)
                    size -= counts.pop(low)
                    offset = low
        finally:
            self.size, self.offset, self.corollary = size, offset, corollary
            self.t, self.r_prev = t, r_prev

    def residual(self) -> int:
        return sum((raw - self.offset) * c for raw, c in self.counts.items())


def _prepare(deltas: Sequence, rs: Sequence, horizon: int | None) -> tuple[np.ndarray, list[int], int]:
    if horizon is None:
        horizon = len(deltas)
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
        raise DomainError(f"horizon must be a positive integer, got {horizon!r}")
    horizon = int(horizon)
    if len(deltas) < horizon or len(rs) < horizon:
        raise DomainError(f"need at least {horizon} deltas and rs, got {len(deltas)} and {len(rs)}")
    d = np.asarray(deltas[:horizon])
    bad = np.flatnonzero(~((d >= 0) & (d <= 1)))
    if bad.size:
        raise DomainError(f"delta_{bad[0] + 1} must lie in [0, 1], got {d[bad[0]]!r}")
    r = np.asarray(rs[:horizon])
    if r.dtype.kind not in "iu" or (r < 1).any():
        raise DomainError("repetition requirements must be positive integers")
    return d, r.tolist(), horizon


def _run(d: np.ndarray, rs: list[int]) -> tuple[_Gatherer, int, bool]:
    g = _Gatherer()
    if d.dtype.kind != "f":
        # common denominator of the deltas and the r's keeps delta/r integral
        exact = [Fraction(x) for x in d.tolist()]
        unit = 1
        for x in exact:
            unit = math.lcm(unit, x.denominator)
        for r in set(rs):
            unit = math.lcm(unit, r)
        g.feed((int(x * unit) for x in exact), rs)
        return g, unit, True
    shift = _float_shift(d)
    g.feed(_to_units(d.astype(np.float64), shift), rs)
    return g, 1 << shift, False


def worst_case_alpha(
    deltas: Sequence[float | Fraction],
    rs: Sequence[int],
    horizon: int | None = None,
    tail: float | Fraction = 0.0,
) -> AlphaEstimate:
    """Run the gathering algorithm over ``t = 1..horizon``.

    Args:
        deltas: Thresholds ``delta_t`` in ``[0, 1]``. Floats are handled
            exactly; if the entries are :class:`~fractions.Fraction` or int
            the whole computation is rational and results are Fractions.
        rs: Nondecreasing positive repetition requirements.
        horizon: Number of decision points to process; defaults to
            ``len(deltas)``.
        tail: Caller-supplied bound on ``sum_{t > horizon} delta_t / r_t``.

    Returns:
        ``AlphaEstimate`` whose ``collected`` is the gathered error (clamped
        to 1) and whose ``tail_bound`` covers both the residual list entries,
        each of which can contribute at most ``entry / r_horizon`` later, and
        ``tail``.

    Raises:
        DomainError: On decreasing ``rs`` or out-of-range inputs.
    """
    d, rs, horizon = _prepare(deltas, rs, horizon)
    g, unit, exact = _run(d, rs)
    return _estimate(g, unit, horizon, tail, exact=exact)


def _estimate(g: _Gatherer, unit: int, horizon: int, tail, exact: bool) -> AlphaEstimate:
    collected = Fraction(g.offset, unit)
    residual = Fraction(g.residual(), unit * g.r_prev)
    corollary = Fraction(g.corollary, unit)
    if exact:
        tail = Fraction(tail)
        return AlphaEstimate(min(collected, Fraction(1)), residual + tail, horizon, min(corollary + tail, Fraction(1)))
    tail = float(tail)
    return AlphaEstimate(
        collected=min(float(collected), 1.0),
        tail_bound=_round_up(residual + Fraction(tail)),
        horizon=horizon,
        corollary=min(_round_up(corollary + Fraction(tail)), 1.0),
    )


def estimate_alpha(plan: TestPlan, horizon: int) -> AlphaEstimate:
    """Gathering algorithm for a plan, with the schedule's analytic tail beyond ``horizon``.

    For plans built as ``delta_t = alpha_t r_t``, ``delta_t / r_t <= alpha_t``
    (clamping only lowers ``delta_t``), so the unspent budget
    ``sum_{t > horizon} alpha_t`` bounds everything past the horizon.
    """
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
        raise DomainError(f"horizon must be a positive integer, got {horizon!r}")
    horizon = int(horizon)
    shift = _plan_shift(plan, horizon)
    g = _Gatherer()
    for _, deltas, rs in iter_chunks(plan, 1, horizon):
        g.feed(_to_units(deltas, shift), rs.tolist())
    return _estimate(g, 1 << shift, horizon, plan.schedule.tail_sum(horizon), exact=False)


def _plan_shift(plan: TestPlan, horizon: int) -> int:
    return max((_float_shift(deltas) for _, deltas, _ in iter_chunks(plan, 1, horizon)), default=0)


def corollary_sum(deltas: Iterable[float | Fraction], rs: Iterable[int], tail: float = 0.0) -> float | Fraction:
    """``min(sum_t delta_t / r_t + tail, 1)`` over explicit sequences.

    Exact for rational inputs; for floats the sum is rounded upward so it
    never falls below the gathered error it is meant to dominate.
    """
    deltas, rs = list(deltas), list(rs)
    if len(deltas) != len(rs):
        raise DomainError("deltas and rs must have equal length")
    total = sum((Fraction(d) / int(r) for d, r in zip(deltas, rs)), Fraction(0)) + Fraction(tail)
    if any(not isinstance(d, float) for d in deltas):
        return min(total, Fraction(1))
    return min(_round_up(total), 1.0)


def corollary_bound(plan: TestPlan, horizon: int) -> float:
    """``sum_{t <= horizon} delta_t / r_t`` plus the schedule's tail past ``horizon``, clamped to 1.

    Each term is rounded up in integer units, so the value is a rigorous
    upper bound and dominates :func:`estimate_alpha` at the same horizon.
    """
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
        raise DomainError(f"horizon must be a positive integer, got {horizon!r}")
    horizon = int(horizon)
    shift = _plan_shift(plan, horizon)
    total = 0
    for _, deltas, rs in iter_chunks(plan, 1, horizon):
        total -= sum((-d) // r for d, r in zip(_to_units(deltas, shift), rs.tolist()))
    tail = Fraction(plan.schedule.tail_sum(horizon))
    return min(_round_up(Fraction(total, 1 << shift) + tail), 1.0)
