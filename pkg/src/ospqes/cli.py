"""Command-line front end.

Exit codes: 0 success, 1 verification or residual failure, 2 bad flags or
unreadable input, 3 physics rejection.
"""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .dirac import sample_table
from .osp22 import (
    make_generators,
    subspace_image_check,
    verify_decomposition,
    verify_osp_relations,
    verify_structure_identities,
)
from .records import (
    RecordError,
    csv_lines,
    dumps,
    load_records,
    point_from_record,
    record_from_point,
    summary_csv,
    write_atomic,
)
from .spectra import PhysicsError, ScanConfig, derive_context, scan_spectrum
from .validate import check_point

log = logging.getLogger("ospqes")

SUBSPACE_RANGE = range(7)


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# -- verify-algebra --------------------------------------------------------------


def run_verify_algebra(args) -> int:
    nparam = None if args.n is None else args.n
    g = make_generators(nparam)
    reports = [verify_osp_relations(g), verify_structure_identities(g), verify_decomposition(g.nparam, args.mode)]
    reports += [subspace_image_check(k) for k in SUBSPACE_RANGE]
    ok = all(r.passed_expected for r in reports)
    notes = [
        {"report": r.title, "name": e.name, "detail": e.documented or e.residual}
        for r in reports
        for e in r.entries
        if e.info or (e.documented and not e.passed)
    ]
    if args.format == "json":
        text = dumps(
            {
                "n": str(g.nparam),
                "mode": args.mode,
                "pass": ok,
                "reports": [r.to_dict() for r in reports],
                "info": notes,
            }
        ) + "\n"
    else:
        lines = [r.render() for r in reports]
        for note in notes:
            lines.append(f"INFO: {note['name']}: {note['detail']}")
        lines.append(f"RESULT: {'PASS' if ok else 'FAIL'}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0 if ok else 1


# -- solve ---------------------------------------------------------------------------


def run_solve(args) -> int:
    try:
        ctx = derive_context(args.m, args.zalpha, args.l, args.n)
    except PhysicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    scan = ScanConfig(
        x0_min=args.x0_min,
        x0_max=args.x0_max,
        grid_points=args.grid_points,
        tol_accept=args.tol,
    )
    try:
        points, diag = scan_spectrum(ctx, scan, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for r in diag.near_misses:
        log.warning("near miss at x0=%.12g: %s", r["x0"], r["reason"])
    if diag.skipped_nonfinite:
        log.info("skipped %d non-finite grid cells", diag.skipped_nonfinite)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if args.timestamp else None
    if args.format == "csv":
        text = summary_csv(points)
    else:
        text = dumps([record_from_point(p, scan, stamp) for p in points]) + "\n"
    _emit(text, args.out)
    print(f"{len(points)} spectral point(s) for n={ctx.n}", file=sys.stderr)
    return 0


# -- check -----------------------------------------------------------------------------


def run_check(args) -> int:
    try:
        records = load_records(args.input)
        points = [point_from_record(r, strict=args.strict) for r in records]
    except (RecordError, PhysicsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not points:
        print("warning: no records to check", file=sys.stderr)
        return 1 if args.strict else 0
    ok = True
    lines = [f"{'rec':>3}  {'identity':<36} {'value':>12} {'tol':>8}  status"]
    for i, (rec, point) in enumerate(zip(records, points)):
        tol = rec.get("provenance", {}).get("scan", {}).get("tol_accept", ScanConfig.tol_accept)
        try:
            rows = check_point(point, tol=float(tol))
        except (ArithmeticError, ValueError) as exc:
            lines.append(f"{i:>3}  {'recompute':<36} {'-':>12} {'-':>8}  FAIL ({exc})")
            ok = False
            continue
        for row in rows:
            status = "ok" if row.passed else "FAIL"
            ok &= row.passed
            lines.append(f"{i:>3}  {row.name:<36} {row.value:>12.3e} {row.tol:>8.0e}  {status}")
    lines.append(f"RESULT: {'PASS' if ok else 'FAIL'} ({len(points)} record(s))")
    print("\n".join(lines))
    return 0 if ok else 1


# -- wavefunction ----------------------------------------------------------------------


def run_wavefunction(args) -> int:
    try:
        records = load_records(args.input)
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not 0 <= args.index < len(records):
        raise UsageError(f"--index {args.index} out of range for {len(records)} record(s)")
    try:
        point = point_from_record(records[args.index])
    except (RecordError, PhysicsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rmax = args.rmax if args.rmax is not None else 10.0 * point.lB
    try:
        rows = sample_table(point.ctx, point, rmax, args.samples)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(csv_lines(("r", "x", "F", "G"), ((s.r, s.x, s.F, s.G) for s in rows)), args.out)
    return 0


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ospqes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-algebra", help="exact checks of the osp(2,2) representation and T_Q")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--n", type=_rational, default=None, help="rational value of n")
    grp.add_argument("--n-symbolic", action="store_true", help="keep n symbolic (default)")
    p.add_argument("--mode", choices=("faithful", "corrected", "both"), default="both")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    p.add_argument("--out")
    p.set_defaults(func=run_verify_algebra, format="text")

    p = sub.add_parser("solve", help="find polynomial-sector (x0, E, eB) points")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--zalpha", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--x0-min", type=float, default=ScanConfig.x0_min)
    p.add_argument("--x0-max", type=float, default=ScanConfig.x0_max)
    p.add_argument("--grid-points", type=int, default=ScanConfig.grid_points)
    p.add_argument("--tol", type=float, default=ScanConfig.tol_accept)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timestamp", action="store_true", help="record wall-clock time in provenance")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.add_argument("--out")
    p.set_defaults(func=run_solve, format="json")

    p = sub.add_parser("check", help="recompute all residuals of a solution file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--strict", action="store_true", help="reject unknown fields and empty files")
    p.set_defaults(func=run_check)

    p = sub.add_parser("wavefunction", help="tabulate F and G for one stored point")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--rmax", type=float, default=None, help="default 10 lB")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=run_wavefunction)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
