"""Command-line scans: ``odensemble <subcommand> [flags]``.

Exit status is 0 on success, 1 when any system ended with a non-finite
abort and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scans import DEFAULT_RANGES, SUBCOMMANDS, Range, ScanSpec, model_of, run_scan

HELP = {
    "duffing-poincare": "Poincare sections of the forced Duffing oscillator",
    "duffing-max-acc": "per-period maxima of y1 from an ordinary accessory",
    "duffing-max-event": "local maxima of y1 from the y2 = 0 event",
    "duffing-lyapunov": "largest Lyapunov exponent of the Duffing oscillator",
    "bubble-scan": "relative expansion of a dual-frequency driven bubble",
    "valve-scan": "maxima and minima of the impacting pressure relief valve",
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_common(sub: argparse.ArgumentParser, name: str) -> None:
    model = model_of(name)
    for param, rng in DEFAULT_RANGES[model].items():
        g = sub.add_argument_group(f"{param} range")
        g.add_argument(f"--{param}-min", type=float, default=rng.min)
        g.add_argument(f"--{param}-max", type=float, default=rng.max)
        g.add_argument(f"--{param}-res", type=_positive_int, default=rng.res)
        g.add_argument(f"--{param}-scale", choices=("lin", "log"), default=rng.scale)
    sub.add_argument("--systems", type=_positive_int, default=None,
                     help="batch capacity; the pool is solved in chunks of this size")
    sub.add_argument("--transient", type=_nonneg_int, default=None)
    sub.add_argument("--save", type=_positive_int, default=None)
    sub.add_argument("--solver", choices=("rk4", "rkck45"), default="rkck45")
    sub.add_argument("--dt", type=_positive_float, default=1e-2,
                     help="initial (RKCK45) or fixed (RK4) time step")
    sub.add_argument("--rel-tol", type=_positive_float, default=None)
    sub.add_argument("--abs-tol", type=_positive_float, default=None)
    sub.add_argument("--event-tol", type=_positive_float, default=1e-6)
    sub.add_argument("--workers", type=_positive_int, default=None,
                     help="worker threads (default: ODENSEMBLE_WORKERS or CPU count)")
    sub.add_argument("--tile-size", type=_positive_int, default=64)
    sub.add_argument("--ic", type=float, nargs="+", default=None,
                     help="initial condition shared by every system")
    sub.add_argument("--output", "-o", default=f"{name}.txt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odensemble", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        _add_common(subs.add_parser(name, help=HELP[name]), name)
    return parser


def spec_from_args(args: argparse.Namespace) -> ScanSpec:
    model = model_of(args.subcommand)
    ranges = {}
    for param in DEFAULT_RANGES[model]:
        ranges[param] = Range(
            getattr(args, f"{param}_min"),
            getattr(args, f"{param}_max"),
            getattr(args, f"{param}_res"),
            getattr(args, f"{param}_scale"),
        )
    dims = {"duffing": 2, "bubble": 2, "valve": 3}[model]
    if args.ic is not None and len(args.ic) != dims:
        raise ValueError(f"--ic needs {dims} values for {model}")
    return ScanSpec(
        subcommand=args.subcommand,
        ranges=ranges,
        transient=args.transient,
        save=args.save,
        algorithm=args.solver.upper(),
        dt=args.dt,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        event_tol=args.event_tol,
        output=args.output,
        workers=args.workers,
        tile_size=args.tile_size,
        systems=args.systems,
        ic=None if args.ic is None else tuple(args.ic),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        q = spec.ranges.get("q")
        if q is not None and min(q.min, q.max) <= 0:
            raise ValueError("q range must be positive")
    except ValueError as exc:
        parser.error(str(exc))
    out_dir = Path(spec.output).resolve().parent
    if not out_dir.is_dir():
        print(f"odensemble: output directory {out_dir} does not exist", file=sys.stderr)
        return 1
    try:
        result = run_scan(spec)
    except OSError as exc:
        print(f"odensemble: cannot write output: {exc}", file=sys.stderr)
        return 1
    n_rows = len(result.rows)
    print(f"wrote {n_rows} rows to {spec.output}", file=sys.stderr)
    if result.any_abort:
        print("odensemble: at least one system hit a non-finite abort", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
