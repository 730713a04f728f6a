"""Command-line front end: ``spacelike verify | report | rotsurf | scan``.

Exit status is 0 when everything checked passes, 1 when an identity fails
and 2 for usage, spec or domain errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import rotational as rot
from . import suite
from ._version import __version__
from .ambient import ChartDomainError
from .codazzi import inf_abs_curvature_scan, metric_norm, pair_codazzi_defect
from .deform import ConditioningError, DeformationContext, InconsistentContext, deformed_frame, deformed_metric_field
from .expr import ExprError
from .jets import JetDomainError
from .specfile import SpecError, build_patch, load_spec
from .surface import GeometryError, Grid, frame_jets

log = logging.getLogger("spacelike")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
USER_ERRORS = (
    SpecError,
    GeometryError,
    ChartDomainError,
    ExprError,
    JetDomainError,
    rot.InadmissibleStart,
    ConditioningError,
    InconsistentContext,
    OSError,
)


class UsageError(ValueError):
    pass


def _grid_arg(text: str) -> tuple[int, int]:
    try:
        nu, nv = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 20x20, got {text!r}") from None
    if nu < 1 or nv < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return nu, nv


def _tol_arg(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"tolerance override must be ID=VALUE, got {text!r}")
    if key not in suite.DESCRIPTIONS:
        raise argparse.ArgumentTypeError(f"unknown identity id {key!r}")
    try:
        return key, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {val!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("spec", type=Path, help="surface-spec file")
    p.add_argument("--grid", type=_grid_arg, default=(10, 10), metavar="NxM", help="sample grid (default 10x10)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--c", type=float, default=None, help="deformation constant (free mode, default 1)")
    mode.add_argument("--constant-K", type=float, default=None, dest="constant_K", metavar="K",
                      help="assert constant curvature K in (-1, 0] and use c = 1/(K+1)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacelike", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the identity suite and print a JSON report")
    _add_common(p)
    p.add_argument("--tol", type=_tol_arg, action="append", default=[], metavar="ID=VALUE",
                   help="per-identity tolerance override (repeatable)")
    p.add_argument("--default-tol", type=float, default=None,
                   help="tolerance for identities without an override (default 1e-8, or 1e-5 for ODE patches)")
    p.add_argument("--shape-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    p = sub.add_parser("report", help="write the per-point field table")
    _add_common(p)
    p.add_argument("-o", "--output", type=Path, required=True, help="output path ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("rotsurf", help="shoot a rotational constant-K profile")
    p.add_argument("--K", type=float, required=True, dest="K")
    start = p.add_mutually_exclusive_group(required=True)
    start.add_argument("--axis", action="store_true", help="smooth start on the axis")
    start.add_argument("--annulus", type=float, nargs=3, metavar=("R0", "H0", "V0"), help="start h(r0)=h0, h'(r0)=v0")
    p.add_argument("--r-span", type=float, nargs=2, default=(rot.AXIS_LIMIT, 5.0), metavar=("R_MIN", "R_MAX"))
    p.add_argument("--max-step", type=float, default=0.05)
    p.add_argument("--atol", type=float, default=rot.ATOL)
    p.add_argument("-o", "--output", type=Path, required=True, help="CSV path; diagnostics go to a .json sidecar")

    p = sub.add_parser("scan", help="extremes of a deformed-geometry field over the grid")
    _add_common(p)
    p.add_argument("--quantity", choices=("ktilde", "kpair", "pair_codazzi"), required=True)
    return parser


# -- shared setup ------------------------------------------------------------------

def _context(args):
    spec = load_spec(args.spec)
    patch = build_patch(spec)
    grid = Grid(args.grid[0], args.grid[1], patch.domain)
    if args.constant_K is not None:
        if not -1.0 < args.constant_K <= 0.0:
            raise UsageError(f"--constant-K needs -1 < K <= 0, got {args.constant_K}")
        ctx = DeformationContext.constant_k(patch, args.constant_K, grid)
        if not ctx.consistent:
            log.warning("patch curvature deviates from K = %s by %.3g; pair claims skipped",
                        args.constant_K, ctx.K_deviation)
    else:
        c = 1.0 if args.c is None else args.c
        if not c > 0:
            raise UsageError(f"--c must be positive, got {c}")
        ctx = DeformationContext.free_c(patch, c)
    return spec, ctx, grid


def _threads(args) -> int:
    return max(1, args.threads) if args.threads is not None else suite.default_threads()


def _write(path: Path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        path.write_text(text)


# -- commands ----------------------------------------------------------------------

def cmd_verify(args) -> int:
    spec, ctx, grid = _context(args)
    report = suite.run_suite(
        ctx, grid, tolerances=dict(args.tol), default_tol=args.default_tol,
        threads=_threads(args), shape_scale=args.shape_scale, fingerprint=spec.fingerprint,
    )
    sys.stdout.write(report.to_json())
    for r in report.identities:
        if not r.passed:
            log.info("%s failed: max %.3g > tol %.3g at %s", r.id, r.max, r.tolerance, r.argmax)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_report(args) -> int:
    _, ctx, grid = _context(args)
    table = suite.field_table(ctx, grid, threads=_threads(args))
    text = suite.table_csv(table) if args.format == "csv" else suite.table_json(table)
    _write(args.output, text)
    return EXIT_PASS


def cmd_rotsurf(args) -> int:
    start = rot.AxisStart() if args.axis else rot.AnnulusStart(*args.annulus)
    if isinstance(start, rot.AxisStart):
        rot.axis_parameter(args.K)
    prof = rot.shoot(start, args.K, tuple(args.r_span), max_step=args.max_step, atol=args.atol)
    sidecar = rot.write_profile(prof, args.output)
    sys.stdout.write(sidecar.read_text())
    return EXIT_PASS


def _scan_field(ctx, grid, quantity, threads):
    u, v = grid.points()
    ctx.patch.check_contains(u, v)

    def chunk(a, b):
        df = deformed_frame(ctx, (a, b), fj=frame_jets(ctx.patch, a, b))
        if quantity == "ktilde":
            val = df.ktilde_lemma()
        elif quantity == "kpair":
            val = df.pair_curvature()
        else:
            val = metric_norm(df.gt, pair_codazzi_defect(df.gt, df.fj.alpha))
        return {"value": val}

    return u, v, suite.map_chunks(chunk, u, v, threads)["value"]


def cmd_scan(args) -> int:
    spec, ctx, grid = _context(args)
    u, v, f = _scan_field(ctx, grid, args.quantity, _threads(args))
    i_min, i_max = int(np.argmin(f)), int(np.argmax(f))
    i_abs = int(np.argmin(np.abs(f)))
    out = {
        "quantity": args.quantity,
        "fingerprint": spec.fingerprint,
        "grid": {"nu": grid.nu, "nv": grid.nv},
        "mode": ctx.mode,
        "c": ctx.c,
        "K": ctx.K,
        "n_points": int(f.size),
        "inf": float(f[i_min]),
        "argmin": [float(u[i_min]), float(v[i_min])],
        "sup": float(f[i_max]),
        "argmax": [float(u[i_max]), float(v[i_max])],
        "inf_abs": float(abs(f[i_abs])),
        "argmin_abs": [float(u[i_abs]), float(v[i_abs])],
    }
    K = ctx.K
    if args.quantity == "ktilde":
        if K is not None:
            out["bound_line"] = f"sup K~ bound K-1 = {suite.fmt(K - 1.0)}; observed sup = {suite.fmt(f[i_max])}"
            out["range_line"] = (
                f"K~ range [K-1, -(K+1)] = [{suite.fmt(K - 1.0)}, {suite.fmt(-(K + 1.0))}]; "
                f"observed [{suite.fmt(f[i_min])}, {suite.fmt(f[i_max])}]"
            )
        else:
            out["bound_line"] = f"sup K~ = {suite.fmt(f[i_max])} (no bound without --constant-K)"
    elif args.quantity == "kpair":
        if K is not None:
            out["bound_line"] = f"K(g~, alpha) target -(K+1) = {suite.fmt(-(K + 1.0))}"
        else:
            out["bound_line"] = "K(g~, alpha) has no constant target without --constant-K"
    else:
        scan = inf_abs_curvature_scan(deformed_metric_field(ctx), grid)
        out["inf_abs_KA"] = scan.value
        out["argmin_abs_KA"] = list(scan.point)
        out["bound_line"] = f"inf |K_A| over grid for A = g~: {suite.fmt(scan.value)}"
    sys.stdout.write(suite.dumps(out))
    return EXIT_PASS


COMMANDS = {"verify": cmd_verify, "report": cmd_report, "rotsurf": cmd_rotsurf, "scan": cmd_scan}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USER_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
