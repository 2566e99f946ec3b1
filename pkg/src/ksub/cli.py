"""``ksub`` command-line interface.

Models come from JSON descriptors (see :mod:`ksub.descriptor`); results go
to stdout as JSON or CSV with 17 significant digits.  Errors are written to
stderr as ``{"error": ..., "code": ...}`` with exit codes

    1  verification failure
    2  bad arguments, descriptor or expression
    3  point or region outside the domain
    4  geodesic left the domain (partial CSV on stdout)
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import curvature as cv
from . import paths as pa
from .descriptor import DescriptorError, load_descriptor
from .exprfield import EvaluationError, ExprSyntaxError
from .model import bundle_curvature
from .numerics import DEFAULT_STEP
from .surface import DomainError, gaussian_curvature

EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_GEODESIC_EXIT = 4


class CliError(Exception):
    def __init__(self, message: str, code: int, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra


# ---------------------------------------------------------------------------
# Output

def _format_number(v: float) -> str:
    return format(v, ".17g") if math.isfinite(v) else "null"


def to_json(obj: Any) -> str:
    """Deterministic JSON with floats printed to 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_number(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{to_json(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(obj: Any) -> None:
    sys.stdout.write(to_json(obj) + "\n")


# ---------------------------------------------------------------------------
# Argument helpers

def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise CliError(f"{what} must be {n} comma-separated numbers, got {text!r}", EXIT_USAGE)
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise CliError(f"{what} must be {n} comma-separated finite numbers, got {text!r}",
                       EXIT_USAGE)
    return vals


def default_step() -> float:
    """``KSUB_STEP`` from the environment, else the library default."""
    raw = os.environ.get("KSUB_STEP")
    if raw is None or raw == "":
        return DEFAULT_STEP
    try:
        step = float(raw)
    except ValueError:
        raise CliError(f"KSUB_STEP must be a number, got {raw!r}", EXIT_USAGE)
    if not (step > 0 and math.isfinite(step)):
        raise CliError(f"KSUB_STEP must be positive, got {raw!r}", EXIT_USAGE)
    return step


def _step(args) -> float:
    if args.step is None:
        return default_step()
    if not (args.step > 0 and math.isfinite(args.step)):
        raise CliError(f"--step must be positive, got {args.step}", EXIT_USAGE)
    return args.step


# ---------------------------------------------------------------------------
# Commands

def cmd_curvature(args) -> int:
    m = load_descriptor(args.model)
    p = _floats(args.point, 3, "--point")
    out = {
        "K_M": float(gaussian_curvature(m.surface, p[:2])),
        "tau": float(bundle_curvature(m, p)),
        "scalar": cv.scalar_curvature(m, p),
    }
    if args.plane_normal is not None:
        n = _floats(args.plane_normal, 3, "--plane-normal")
        try:
            plane = cv.make_plane(m, p, n)
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise CliError(str(exc), EXIT_USAGE)
        out["sectional"] = cv.sectional(m, plane)
    _emit(out)
    return 0


def cmd_geodesic(args) -> int:
    m = load_descriptor(args.model)
    start = _floats(args.start, 3, "--start")
    if not args.length > 0:
        raise CliError("--length must be positive", EXIT_USAGE)
    path = pa.geodesic(m, start, args.theta, args.mu, args.length, _step(args),
                       vertical=args.vertical)
    pa.write_csv(path, sys.stdout)
    if not path.complete:
        sys.stdout.flush()
        raise CliError("geodesic left the domain", EXIT_GEODESIC_EXIT, exit_time=path.exit_time)
    return 0


def cmd_lift(args) -> int:
    m = load_descriptor(args.model)
    if not args.t1 > args.t0:
        raise CliError("need t1 > t0", EXIT_USAGE)
    curve = pa.curve_from_exprs(args.x, args.y, args.t0, args.t1)
    pa.write_csv(pa.horizontal_lift(m, curve, args.z0, _step(args)), sys.stdout)
    return 0


def cmd_holonomy(args) -> int:
    m = load_descriptor(args.model)
    center = _floats(args.center, 2, "--center")
    if not args.radius > 0:
        raise CliError("--radius must be positive", EXIT_USAGE)
    _emit(pa.holonomy_report(m, pa.circle(center, args.radius), _step(args)))
    return 0


def cmd_classify(args) -> int:
    if args.grid < 5:
        raise CliError("--grid must be at least 5", EXIT_USAGE)
    m = load_descriptor(args.model)
    res = cv.classify_homogeneous(m, m.surface.interior_grid(args.grid), args.tol)
    ranges = {"K_M": res.kappa_range, "tau": res.tau_range}
    if isinstance(res, cv.ECK):
        _emit({"result": "ECK", "kappa": res.kappa, "tau": res.tau, "ranges": ranges})
    else:
        _emit({"result": "non-homogeneous", "report": res.report, "ranges": ranges})
    return 0


def cmd_eta(args) -> int:
    m = load_descriptor(args.model)
    eta = m.params.get("eta")
    if eta is None:
        raise CliError("eta is only defined for 'eck' and 'from_tau' models", EXIT_USAGE)
    x, y = _floats(args.point, 2, "--point")
    m.check_interior(x, y)
    gx, gy = eta.grad(x, y)
    _emit({"eta": float(eta(x, y)), "eta_x": float(gx), "eta_y": float(gy)})
    return 0


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    if args.suite != "all" and args.suite not in SUITES:
        raise CliError(f"unknown suite {args.suite!r}", EXIT_USAGE)
    results = run_suite(args.suite)
    report = {
        "suite": args.suite,
        "passed": all(r.passed for r in results),
        "checks": [{k: v for k, v in r.to_json().items() if k != "seconds"} for r in results],
    }
    _emit(report)
    return 0 if report["passed"] else EXIT_VERIFY


# ---------------------------------------------------------------------------
# Parser

class _Parser(argparse.ArgumentParser):
    """Argument errors become :class:`CliError` so they reach stderr as JSON."""

    def error(self, message):
        raise CliError(message, EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    parser = _Parser(
        prog="ksub", description="Killing submersions: curvature, geodesics and holonomy.")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_cmd(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("model", help="model descriptor JSON file ('-' for stdin)")
        return p

    p = model_cmd("curvature", "K_M, tau, scalar and optional sectional curvature at a point")
    p.add_argument("--point", required=True, metavar="X,Y,Z")
    p.add_argument("--plane-normal", metavar="NX,NY,NZ",
                   help="unit normal of the plane in coordinate components")
    p.set_defaults(func=cmd_curvature)

    p = model_cmd("geodesic", "integrate a geodesic and print CSV t,x,y,z,theta")
    p.add_argument("--start", required=True, metavar="X,Y,Z")
    p.add_argument("--theta", type=float, default=0.0, help="initial heading of the projection")
    p.add_argument("--mu", type=float, default=0.0, help="slope <gamma', xi>")
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--vertical", action="store_true", help="follow the fiber instead")
    p.set_defaults(func=cmd_geodesic)

    p = model_cmd("lift", "horizontal lift of a curve given by expressions in t")
    p.add_argument("--x", required=True, help="x(t)")
    p.add_argument("--y", required=True, help="y(t)")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=2 * math.pi)
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_lift)

    p = model_cmd("holonomy", "holonomy gap of a circle against twice its enclosed tau")
    p.add_argument("--center", required=True, metavar="CX,CY")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_holonomy)

    p = model_cmd("classify", "check whether K_M and tau are constant")
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_classify)

    p = model_cmd("eta", "the potential eta and its gradient at a point")
    p.add_argument("--point", required=True, metavar="X,Y")
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", default="all", choices=["all", *SUITES])
    p.set_defaults(func=cmd_verify)
    return parser


def _fail(message: str, code: int, **extra) -> int:
    sys.stderr.write(to_json({"error": message, "code": code, **extra}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        return _fail(str(exc), exc.code, **exc.extra)
    except DomainError as exc:
        return _fail(str(exc), EXIT_DOMAIN)
    except (DescriptorError, ExprSyntaxError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except EvaluationError as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
