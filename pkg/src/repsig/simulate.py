"""
Seeded Monte Carlo verification of test plans.

Each replication draws a p-value stream from a :data:`StreamModel`, applies
the stopping rule up to a horizon, and records the stop time. Replication
``i`` uses a Philox generator keyed by ``(seed, i)``, so every stream is
fixed by the master seed alone: block size, worker count and horizon do not
change what any replication sees (a longer horizon only extends the stream).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np
from scipy.special import erfc, ndtri

from .errors import DomainError, PlanError
from .numeric import two_sided_z
from .plan import TestPlan

__all__ = [
    "DEFAULT_SEED",
    "IidUniformNull",
    "BrownianNull",
    "BrownianDrift",
    "StreamModel",
    "model_from_dict",
    "SimulationReport",
    "replication_rng",
    "draw_pvalues",
    "first_stops",
    "stop_times",
    "simulate",
    "sweep",
    "derive_seed",
    "wilson_interval",
]

DEFAULT_SEED = 20240917

_MASK64 = (1 << 64) - 1
# p-values per block of replications held in memory at once
_BLOCK_CELLS = 4_000_000
# margin on the Z prefilter; exact p <= delta is decided by erfc
_Z_MARGIN = 1e-6


@dataclass(frozen=True)
class IidUniformNull:
    """Independent Uniform(0, 1] p-values at every decision point."""

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "iid_uniform_null"}


@dataclass(frozen=True)
class BrownianNull:
    """Two-sided z-test p-values of a running sum of iid N(0, 1) observations.

    Consecutive p-values are strongly correlated, as they are for a real
    test re-analyzed as data accrues.
    """

    n_per_point: int = 1

    def __post_init__(self):
        _check_n(self.n_per_point)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "brownian_null", "n_per_point": self.n_per_point}


@dataclass(frozen=True)
class BrownianDrift:
    """Like :class:`BrownianNull` but each observation has mean ``mu``.

    An assumed alternative for power and stop-time exploration; it is not
    derived from any reported experiment.
    """

    mu: float
    n_per_point: int = 1

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")
        _check_n(self.n_per_point)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "brownian_drift",
            "mu": self.mu,
            "n_per_point": self.n_per_point,
            "note": "assumed alternative: Gaussian observations with constant drift",
        }


StreamModel = Union[IidUniformNull, BrownianNull, BrownianDrift]


def _check_n(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n_per_point must be a positive integer, got {n!r}")


def model_from_dict(d: Mapping[str, Any]) -> StreamModel:
    kind = d.get("kind")
    if kind == "iid_uniform_null":
        return IidUniformNull()
    if kind == "brownian_null":
        return BrownianNull(n_per_point=d.get("n_per_point", 1))
    if kind == "brownian_drift":
        if "mu" not in d:
            raise PlanError("brownian_drift model needs 'mu'")
        return BrownianDrift(mu=float(d["mu"]), n_per_point=d.get("n_per_point", 1))
    raise PlanError(f"unknown stream model {kind!r}")


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for replication ``index`` under master ``seed``."""
    key = ((int(seed) & _MASK64) << 64) | (int(index) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_pvalues(model: StreamModel, rng: np.random.Generator, horizon: int) -> np.ndarray:
    """One stream of ``horizon`` p-values."""
    if isinstance(model, IidUniformNull):
        return 1.0 - rng.random(horizon)  # (0, 1], so a zero threshold never fires
    return erfc(np.abs(_z_path(model, rng, horizon)) / math.sqrt(2.0))


def _z_path(model: BrownianNull | BrownianDrift, rng: np.random.Generator, horizon: int) -> np.ndarray:
    n = model.n_per_point
    mu = model.mu if isinstance(model, BrownianDrift) else 0.0
    # n observations per point collapse to one N(mu n, n) increment
    increments = rng.standard_normal(horizon) * math.sqrt(n) + mu * n
    sums = np.cumsum(increments)
    return sums / np.sqrt(n * np.arange(1, horizon + 1, dtype=np.float64))


def first_stops(hits: np.ndarray, rs: np.ndarray) -> np.ndarray:
    """Stop time per row of a hit matrix (0 where the row never stops)."""
    counts = np.cumsum(hits, axis=1, dtype=np.int64)
    reached = counts >= rs
    stopped = reached.any(axis=1)
    return np.where(stopped, reached.argmax(axis=1) + 1, 0)


def _block_stops(plan: TestPlan, model: StreamModel, seed: int, lo: int, hi: int, horizon: int) -> np.ndarray:
    ts = np.arange(1, horizon + 1, dtype=np.int64)
    deltas, rs = plan.thresholds(ts)
    z_floor = None
    if not isinstance(model, IidUniformNull):
        with np.errstate(divide="ignore"):
            z_floor = -ndtri(deltas / 2.0) - _Z_MARGIN
    out = np.zeros(hi - lo, dtype=np.int64)
    per_block = max(1, _BLOCK_CELLS // horizon)
    for start in range(lo, hi, per_block):
        stop = min(hi, start + per_block)
        if isinstance(model, IidUniformNull):
            p = np.stack([1.0 - replication_rng(seed, i).random(horizon) for i in range(start, stop)])
            hits = p <= deltas
        else:
            z = np.abs(np.stack([_z_path(model, replication_rng(seed, i), horizon) for i in range(start, stop)]))
            hits = np.zeros(z.shape, dtype=bool)
            rows, cols = np.nonzero(z >= z_floor)
            hits[rows, cols] = erfc(z[rows, cols] / math.sqrt(2.0)) <= deltas[cols]
        out[start - lo:stop - lo] = first_stops(hits, rs)
    return out


def stop_times(
    plan: TestPlan,
    model: StreamModel,
    replications: int,
    horizon: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> np.ndarray:
    """Stop time of every replication (0 = did not stop by ``horizon``)."""
    _check_positive("replications", replications)
    _check_positive("horizon", horizon)
    if workers <= 1 or replications < 2:
        return _block_stops(plan, model, seed, 0, replications, horizon)
    bounds = np.linspace(0, replications, min(workers * 4, replications) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(
            _block_stops,
            [plan] * (len(bounds) - 1),
            [model] * (len(bounds) - 1),
            [seed] * (len(bounds) - 1),
            bounds[:-1].tolist(),
            bounds[1:].tolist(),
            [horizon] * (len(bounds) - 1),
        )
        return np.concatenate(list(parts))


def _check_positive(name: str, value: int) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    z = two_sided_z(1.0 - level)
    n = float(trials)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SimulationReport:
    """Aggregate of one simulation run; a pure function of its inputs."""

    plan: dict
    model: dict
    replications: int
    horizon: int
    seed: int
    stops: int
    stop_probability: float
    ci95: tuple[float, float]
    mean_stop_time_given_stop: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan": self.plan,
            "model": self.model,
            "replications": self.replications,
            "horizon": self.horizon,
            "seed": self.seed,
            "stop_probability": self.stop_probability,
            "ci95": list(self.ci95),
            "mean_stop_time_given_stop": self.mean_stop_time_given_stop,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def simulate(
    plan: TestPlan,
    model: StreamModel,
    replications: int,
    horizon: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> SimulationReport:
    """Estimate the probability that ``plan`` stops within ``horizon`` under ``model``.

    Under a null model this is the empirical type 1 error. The mean stop
    time is conditional on stopping and is None when no replication stops.
    """
    times = stop_times(plan, model, replications, horizon, seed, workers)
    stopped = times[times > 0]
    k = int(stopped.size)
    return SimulationReport(
        plan=plan.to_dict(),
        model=model.to_dict(),
        replications=int(replications),
        horizon=int(horizon),
        seed=int(seed),
        stops=k,
        stop_probability=k / replications,
        ci95=wilson_interval(k, replications),
        mean_stop_time_given_stop=int(stopped.sum()) / k if k else None,
    )


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for the ``index``-th member of a sweep."""
    state = np.random.SeedSequence([int(seed) & _MASK64, int(index)]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def sweep(
    plans: Sequence[TestPlan],
    model: StreamModel,
    replications: int,
    horizon: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> list[SimulationReport]:
    """:func:`simulate` for each plan, in order, with seeds ``derive_seed(seed, i)``."""
    return [
        simulate(plan, model, replications, horizon, derive_seed(seed, i), workers)
        for i, plan in enumerate(plans)
    ]
