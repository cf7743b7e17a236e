"""
Command-line interface.

Subcommands: plan, curve, alpha, monitor, simulate, compare. Tables go out
as CSV with a header row, reports as JSON. Exit codes: 0 success (or a
monitored stream stopped significant), 2 usage or validation error, 3 a
monitored stream ended without stopping.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from contextlib import contextmanager
from typing import Any, Iterator, Sequence, TextIO

import numpy as np

from .errors import RepsigError
from .monitor import Monitor, StopSignificant, new_monitor
from .numeric import two_sided_z
from .plan import TestPlan, baseline_z, load_plan, validate_plan
from .simulate import DEFAULT_SEED, BrownianDrift, BrownianNull, IidUniformNull, simulate
from .spending import GeometricSchedule
from .worst_case import estimate_alpha, worst_case_alpha

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_STOPPED = 3

SEED_ENV = "REPSIG_SEED"


class UsageError(Exception):
    pass


def fmt(x: float | int | None) -> str:
    """12 significant digits; scientific notation below 1e-4."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def z_or_none(delta: float) -> float | None:
    return two_sided_z(delta) if delta > 0.0 else None


def log_spaced(t_max: int, per_decade: int = 400) -> np.ndarray:
    """Distinct integers from 1 to ``t_max``, at most ``per_decade`` per decade."""
    decades = math.log10(t_max)
    n = max(2, int(math.ceil(decades * per_decade)) + 1)
    ts = np.unique(np.rint(np.logspace(0.0, decades, n)).astype(np.int64))
    ts = ts[(ts >= 1) & (ts <= t_max)]
    return np.union1d(ts, [1, t_max]).astype(np.int64)


def sample_points(t_max: int, log_spacing: bool, per_decade: int) -> np.ndarray:
    if log_spacing:
        return log_spaced(t_max, per_decade)
    return np.arange(1, t_max + 1, dtype=np.int64)


def describe(plan: TestPlan) -> str:
    parts = []
    for d in (plan.schedule.to_dict(), plan.policy.to_dict()):
        fields = " ".join(f"{k}={v}" for k, v in d.items() if k not in ("kind", "values"))
        parts.append(f"{d['kind']} {fields}".strip())
    return " | ".join(parts)


@contextmanager
def open_out(path: str | None) -> Iterator[TextIO]:
    if path in (None, "-", "stdout"):
        yield sys.stdout
        return
    with open(path, "w", newline="") as fh:
        yield fh


def report_findings(plan: TestPlan) -> None:
    for finding in validate_plan(plan):
        print(finding, file=sys.stderr)


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_plan(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan[0])
    report_findings(plan)
    with open_out(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "alpha_t", "r_t", "delta_t", "z_t"])
        for t in range(1, args.t_max + 1):
            th = plan.threshold(t)
            writer.writerow([t, fmt(plan.alpha_at(t)), th.r, fmt(th.delta), fmt(z_or_none(th.delta))])
    return EXIT_OK


def _expand_plans(args: argparse.Namespace) -> list[tuple[str, TestPlan]]:
    plans = [load_plan(src) for src in args.plan]
    labels = list(args.label or [])
    if len(labels) > len(plans):
        raise UsageError("more --label values than --plan values")
    labelled = [(labels[i] if i < len(labels) else describe(p), p) for i, p in enumerate(plans)]
    if not args.w:
        return labelled
    expanded = []
    for label, plan in labelled:
        if not isinstance(plan.schedule, GeometricSchedule):
            raise UsageError("--w applies to geometric schedules only")
        for w in args.w:
            p = TestPlan(GeometricSchedule(plan.schedule.alpha, w), plan.policy)
            expanded.append((f"{label} w={w}", p))
    return expanded


def cmd_curve(args: argparse.Namespace) -> int:
    series = _expand_plans(args)
    ts = sample_points(args.t_max, args.log_spacing, args.points_per_decade)
    with open_out(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["series", "t", "delta", "z"])
        for label, plan in series:
            report_findings(plan)
            deltas, _ = plan.thresholds(ts)
            for t, d in zip(ts.tolist(), deltas.tolist()):
                writer.writerow([label, t, fmt(d), fmt(z_or_none(d))])
    return EXIT_OK


def _halving_example(alpha: float, horizon: int) -> tuple[list[float], list[int]]:
    deltas = [alpha / 2.0 ** ((t - 1).bit_length() + 1) for t in range(1, horizon + 1)]
    rs = [(t + 1) // 2 for t in range(1, horizon + 1)]
    return deltas, rs


def _load_sequences(source: str) -> tuple[list[float], list[int]]:
    text = source if source.strip().startswith("{") else open(source).read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid sequence JSON: {exc}")
    if not isinstance(data, dict) or set(data) != {"deltas", "rs"}:
        raise UsageError('sequence JSON must be {"deltas": [...], "rs": [...]}')
    try:
        return [float(d) for d in data["deltas"]], [int(r) for r in data["rs"]]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid sequence values: {exc}")


def cmd_alpha(args: argparse.Namespace) -> int:
    if sum([args.plan is not None, args.sequence is not None, args.halving_example]) != 1:
        raise UsageError("give exactly one of --plan, --sequence, --halving-example")
    if args.horizon is None and args.sequence is None:
        raise UsageError("--horizon is required with --plan and --halving-example")
    if args.plan:
        plan = load_plan(args.plan[0])
        report_findings(plan)
        est = estimate_alpha(plan, args.horizon)
    else:
        if args.sequence:
            deltas, rs = _load_sequences(args.sequence)
        else:
            deltas, rs = _halving_example(args.alpha, args.horizon)
        horizon = len(deltas) if args.horizon is None else min(args.horizon, len(deltas))
        est = worst_case_alpha(deltas, rs, horizon)
    result = dict(est.to_dict(), corollary_bound=float(est.corollary), upper=float(est.upper))
    with open_out(args.out) as out:
        out.write(json.dumps(result, indent=2) + "\n")
    return EXIT_OK


def _parse_p(line: str, lineno: int) -> float:
    try:
        p = float(line)
    except ValueError:
        raise UsageError(f"line {lineno}: not a number: {line!r}")
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"line {lineno}: p-value {line!r} outside [0, 1]")
    return p


def monitor_stream(monitor: Monitor, lines: Sequence[str] | TextIO, out: TextIO) -> int:
    """Apply the line protocol; returns the exit code."""
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        p = _parse_p(text, lineno)
        decision = monitor.observe(p)
        hit = int(p <= decision.delta_t)
        out.write(",".join([
            str(decision.t), fmt(p), fmt(decision.delta_t), str(hit),
            str(decision.hits), str(decision.r_t), decision.name,
        ]) + "\n")
        out.flush()
        if isinstance(decision, StopSignificant):
            return EXIT_OK
    return EXIT_NOT_STOPPED


def cmd_monitor(args: argparse.Namespace) -> int:
    monitor = new_monitor(load_plan(args.plan[0]))
    for finding in monitor.findings:
        print(finding, file=sys.stderr)
    with open_out(args.out) as out:
        return monitor_stream(monitor, sys.stdin, out)


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}")
    return DEFAULT_SEED


def cmd_simulate(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan[0])
    report_findings(plan)
    if args.model == "iid":
        model = IidUniformNull()
    elif args.model == "brownian":
        model = BrownianNull(args.n_per_point)
    else:
        if args.mu is None:
            raise UsageError("--model drift needs --mu")
        model = BrownianDrift(args.mu, args.n_per_point)
    report = simulate(plan, model, args.reps, args.horizon, resolve_seed(args.seed), args.workers)
    with open_out(args.out) as out:
        out.write(report.to_json() + "\n")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan[0])
    report_findings(plan)
    rhos = [rho for group in args.rho for rho in group]
    if not rhos or any(not rho > 0 for rho in rhos):
        raise UsageError("--rho needs positive values")
    ts = sample_points(args.t_max, args.log_spacing, args.points_per_decade)
    deltas, _ = plan.thresholds(ts)
    with open_out(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "z_repsig"] + [f"z_baseline(rho={rho:g})" for rho in rhos])
        for t, d in zip(ts.tolist(), deltas.tolist()):
            row: list[Any] = [t, fmt(z_or_none(d))]
            row += [fmt(baseline_z(t, rho, plan.alpha)) for rho in rhos]
            writer.writerow(row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repsig", description="Repeated-significance plans for unbounded sequential tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, multi_plan: bool = False, plan_required: bool = True) -> None:
        p.add_argument(
            "--plan", action="append", required=plan_required,
            help="plan JSON: a file path or inline text starting with '{'" + (" (repeatable)" if multi_plan else ""),
        )
        p.add_argument("--out", default=None, help="output path (default stdout)")

    def spacing(p: argparse.ArgumentParser) -> None:
        p.add_argument("--t-max", type=_positive_int, required=True)
        p.add_argument("--log-spacing", action="store_true", help="log-spaced t instead of every t")
        p.add_argument("--points-per-decade", type=_positive_int, default=400)

    p = sub.add_parser("plan", help="threshold table t,alpha_t,r_t,delta_t,z_t")
    common(p)
    p.add_argument("--t-max", type=_positive_int, default=100)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("curve", help="Z-score curves for one or more plans")
    common(p, multi_plan=True)
    spacing(p)
    p.add_argument("--label", action="append", help="series label, matched to --plan by position")
    p.add_argument("--w", type=_float_list, default=None, help="comma-separated w values replacing a geometric plan's w")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("alpha", help="worst-case type 1 error by the gathering algorithm")
    common(p, plan_required=False)
    p.add_argument("--sequence", help='{"deltas": [...], "rs": [...]} as a file path or inline JSON')
    p.add_argument("--halving-example", action="store_true",
                   help="delta_t = alpha / 2^(ceil(lg t) + 1) with r_t = ceil(t / 2)")
    p.add_argument("--alpha", type=float, default=0.05, help="alpha for --halving-example")
    p.add_argument("--horizon", type=_positive_int, default=None,
                   help="decision points to process; required except with --sequence, which defaults to its length")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("monitor", help="apply the stopping rule to p-values read from stdin")
    common(p)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="Monte Carlo stop probability and stop time")
    common(p)
    p.add_argument("--model", choices=["iid", "brownian", "drift"], default="iid")
    p.add_argument("--mu", type=float, default=None, help="per-observation drift for --model drift")
    p.add_argument("--n-per-point", type=_positive_int, default=1)
    p.add_argument("--reps", type=_positive_int, default=10_000)
    p.add_argument("--horizon", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="repeated-significance vs always-valid baseline Z curves")
    common(p)
    spacing(p)
    p.add_argument("--rho", type=_float_list, action="append", required=True, help="comma-separated rho values")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RepsigError, UsageError, OSError) as exc:
        print(f"repsig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
