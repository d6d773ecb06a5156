"""Command-line front end.

Exit codes: 0 success / commutative, 1 checked and failed, 2 usage or load error.
Machine-readable JSON goes to stdout, a one-line human summary to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import commute, scenarios
from .commute import InfeasibleInitialStateError, InvalidConstantsError, NotEligibleError, PairConstants
from .expr import ExprDomainError, ExprSyntaxError
from .sim import (
    BS3,
    TABLEAUS,
    SimulationConfig,
    SimulationError,
    compare,
    simulate_chain,
    write_comparison_csv,
    write_csv,
)
from .system import DEFAULT_POINTS, DEFAULT_SPAN, DEFAULT_TOL, InvalidSystemError, load, save

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path, grid=None):
    try:
        return load(path, grid)
    except FileNotFoundError as exc:
        raise UsageError(f"{path}: no such file") from exc
    except (InvalidSystemError, ExprSyntaxError, ExprDomainError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _grid(args, t0_default: float) -> np.ndarray:
    t0 = t0_default if args.t0 is None else args.t0
    tf = t0 + DEFAULT_SPAN if args.tf is None else args.tf
    if not tf > t0 or args.grid < 2:
        raise UsageError("grid needs tf > t0 and at least two points")
    return np.linspace(t0, tf, args.grid)


def _emit(payload: dict, summary: str) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    print(summary, file=sys.stderr)


def _constants(text: str) -> PairConstants:
    try:
        return PairConstants.parse(text).validate()
    except (ValueError, InvalidConstantsError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_check(args) -> int:
    a = _load(args.a)
    b = _load(args.b)
    grid = _grid(args, a.t0)
    report = commute.check_pair(a, b, grid, args.tol)
    verdict = report.verdict.value
    if report.failed_condition:
        verdict += f" ({report.failed_condition})"
    _emit(report.to_dict(), f"{args.a} vs {args.b}: {verdict}")
    return EXIT_OK if report.commutative else EXIT_FAILED


def cmd_synthesize(args) -> int:
    a = _load(args.a)
    k = _constants(args.k)
    grid = _grid(args, a.t0)
    try:
        b = commute.synthesize_pair(a, k, grid, args.tol)
        if args.y0 is not None:
            b = b.with_ic(commute.required_ic(a, k, args.y0, grid, args.tol))
    except (NotEligibleError, InfeasibleInitialStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    save(b, args.output)
    _emit(b.to_dict(), f"wrote {args.output}")
    return EXIT_OK


def cmd_transitivity(args) -> int:
    a, b, c = _load(args.a), _load(args.b), _load(args.c)
    grid = _grid(args, a.t0)
    report = commute.check_transitivity(a, b, c, grid, args.tol)
    verdicts = ", ".join(
        f"{name}={r.verdict.value}" for name, r in (("AB", report.ab), ("BC", report.bc), ("AC", report.ac))
    )
    _emit(report.to_dict(), f"{verdicts}; transitive={report.transitive}")
    return EXIT_OK if report.transitive else EXIT_FAILED


def _window(text: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in text.split(","))
    if not hi > lo:
        raise argparse.ArgumentTypeError(f"window {text!r} must have hi > lo")
    return lo, hi


def cmd_simulate(args) -> int:
    chain = [_load(path) for path in args.chain.split(",") if path]
    if not chain:
        raise UsageError("--chain needs at least one system file")
    t0 = chain[0].t0 if args.t0 is None else args.t0
    try:
        cfg = SimulationConfig(t0=t0, tf=args.tf, step=args.step, integrator=args.integrator, input=args.input)
    except (ValueError, ExprSyntaxError) as exc:
        raise UsageError(str(exc)) from exc
    if args.reverse:
        chain = chain[::-1]
    try:
        first = simulate_chain(chain, cfg)
        if args.compare:
            second = simulate_chain(chain[::-1], cfg)
    except (SimulationError, ExprDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = sys.stdout if args.output == "-" else args.output
    if args.compare:
        metrics = compare(first, second, args.window)
        write_comparison_csv(first, second, out)
        if args.output != "-":
            payload = {
                "max_abs_diff": metrics.max_abs_diff,
                "rms_diff": metrics.rms_diff,
                "max_abs_diff_by_window": {f"{lo:g},{hi:g}": v for (lo, hi), v in metrics.max_abs_diff_by_window.items()},
                "config": cfg.echo(),
            }
            _emit(payload, f"max |difference| between orders: {metrics.max_abs_diff:.3e}")
    else:
        write_csv(first, out)
        if args.output != "-":
            _emit({"samples": len(first.times), "config": cfg.echo()}, f"wrote {args.output}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    spec = scenarios.get_scenario(str(args.figure))
    summary = scenarios.write_scenario_outputs(spec, args.output, reference=args.reference)
    verdict = summary["transitivity"]
    _emit(summary, f"{spec.name}: wrote 3 comparison CSVs and summary.json to {args.output}; "
                   f"transitive={verdict['transitive']}")
    return EXIT_OK


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t0", type=float, default=None, help="grid start (default: first system's t0)")
    p.add_argument("--tf", type=float, default=None, help=f"grid end (default: t0 + {DEFAULT_SPAN:g})")
    p.add_argument("--grid", type=int, default=DEFAULT_POINTS, help="number of grid points")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="constancy and residual tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltvcommute", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check whether two systems commute")
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="write the commutative partner of a system")
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--k", required=True, metavar="K2,K1,K0")
    p.add_argument("--y0", type=float, default=None, help="also set the commuting initial state with this output")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("transitivity", help="check (A,B), (B,C) and (A,C)")
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    p.add_argument("--c", required=True, metavar="FILE")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_transitivity)

    p = sub.add_parser("simulate", help="simulate a cascade and write CSV")
    p.add_argument("--chain", required=True, metavar="A.json,B.json")
    p.add_argument("--input", default="40*sin(10*pi*t)", metavar="EXPR")
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--tf", type=float, default=10.0)
    p.add_argument("--integrator", choices=sorted(TABLEAUS), default=BS3)
    p.add_argument("--reverse", action="store_true", help="reverse the chain order")
    p.add_argument("--compare", action="store_true", help="run both orders and write the comparison CSV")
    p.add_argument("--window", type=_window, action="append", default=[], metavar="LO,HI")
    p.add_argument("-o", "--output", default="-", metavar="CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paper", help="reproduce a built-in scenario")
    p.add_argument("--figure", type=int, choices=(2, 3, 4), required=True)
    p.add_argument("-o", "--output", required=True, metavar="DIR")
    p.add_argument("--reference", action="store_true", help="also run the RK4 reference integrator")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
