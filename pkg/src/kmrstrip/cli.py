"""Command-line front end.

Subcommands ``params``, ``mesh``, ``solve``, ``verify`` and ``limits``.
Reports are JSON with every float written to 9 significant digits, so
repeated runs produce byte-identical output. Meshes are written as OBJ.

Exit codes: 0 success, 1 usage or domain error, 2 infeasible strip,
3 non-convergence, 4 verification failure.
"""

import argparse
import json
import math
import sys
from importlib import resources

import numpy as np

from . import __version__
from .exceptions import (DomainError, InfeasibleStripError, KMRError,
                         NonConvergenceError)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGENCE = 3
EXIT_VERIFY = 4

DEFAULT_RES = (128, 128)
SIG_DIGITS = 9
PERIOD_CHECK_TOL = 1e-8


REPORT_COMMANDS = ("params", "solve", "verify", "limits")


def load_schema(command):
    """JSON schema of the report written by ``command``."""
    if command not in REPORT_COMMANDS:
        raise KeyError(f"no schema for command {command!r}")
    path = resources.files("kmrstrip") / "schemas" / f"{command}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def normalize_json(obj):
    """Round floats to 9 significant digits; NaN and infinities become ``null``."""
    if isinstance(obj, dict):
        return {str(k): normalize_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    return obj


def dump_json(report):
    return json.dumps(normalize_json(report), indent=2, sort_keys=True) + "\n"


def dump_text(report, prefix=""):
    lines = []
    for key in sorted(report):
        val = report[key]
        if isinstance(val, dict):
            lines.append(dump_text(val, prefix + key + ".").rstrip("\n"))
        else:
            lines.append(f"{prefix}{key} = {json.dumps(normalize_json(val))}")
    return "\n".join(lines) + "\n"


def _resolution(text):
    parts = text.lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}; use N or NUxNV")
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) <= 0:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}; use N or NUxNV")
    return tuple(vals)


def _positive(text):
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def build_parser():
    p = _Parser(prog="kmrstrip", description="KMR minimal graphs over marked strips.")
    p.add_argument("--version", action="version", version=f"kmrstrip {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def surface_args(sp):
        sp.add_argument("--theta", type=float, required=True, help="theta in (0, pi/2)")
        sp.add_argument("--alpha", type=float, required=True, help="alpha in (-pi/2, pi/2]")

    def out_args(sp, formats=("json", "text")):
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--format", choices=formats, default=formats[0])

    sp = sub.add_parser("params", help="periods, fluxes and strip of one surface")
    surface_args(sp)
    out_args(sp)

    sp = sub.add_parser("mesh", help="OBJ mesh of the graph piece or its conjugate")
    surface_args(sp)
    sp.add_argument("--res", type=_resolution, default=DEFAULT_RES, help="N or NUxNV")
    sp.add_argument("--eps-end", type=_positive, default=None, help="end-exclusion radius")
    sp.add_argument("--conjugate", action="store_true")
    out_args(sp, ("obj",))

    sp = sub.add_parser("solve", help="find the surface solving the strip S(h, a)")
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--tol", type=_positive, default=1e-6)
    out_args(sp)

    sp = sub.add_parser("verify", help="graph and boundary checks of one surface")
    surface_args(sp)
    sp.add_argument("--res", type=_resolution, default=DEFAULT_RES, help="N or NUxNV")
    sp.add_argument("--eps-end", type=_positive, default=None, help="end-exclusion radius")
    out_args(sp)

    sp = sub.add_parser("limits", help="distance series along a limit ray")
    sp.add_argument("--regime", choices=("scherk1p", "scherk2p", "helicoid"), required=True)
    sp.add_argument("--alpha", type=float, default=None,
                    help="alpha along the Scherk rays (default pi/4)")
    out_args(sp)
    return p


# ---------------------------------------------------------------- commands


def cmd_params(theta, alpha):
    from .graph import MarkedStrip
    from .weierstrass import SurfaceParams, periods_report

    sp = SurfaceParams(theta, alpha)
    rep = periods_report(sp)
    strip = MarkedStrip(rep.h, rep.a)
    T = rep.T
    checks = {
        "P_normalized": bool(np.abs(rep.P - [2.0, 0.0, 0.0]).max() <= PERIOD_CHECK_TOL),
        "flux_A": bool(np.abs(rep.Fl_A - [0.0, -2.0, 0.0]).max() <= PERIOD_CHECK_TOL),
        "T2_zero": bool(abs(T[1]) <= PERIOD_CHECK_TOL),
        "T3_nonzero": bool(abs(T[2]) > 0),
        "feasible": strip.feasible,
    }
    report = {"theta": sp.theta, "alpha": sp.alpha, "lambda": sp.lam, "mu": sp.mu,
              "omega_h": sp.omega_h, "omega_v": sp.omega_v, **rep.as_dict(),
              "T1_sq_plus_T3_sq": float(T[0] ** 2 + T[2] ** 2),
              "feasible": strip.feasible, "checks": checks}
    return report, all(checks.values())


def cmd_mesh(theta, alpha, resolution=DEFAULT_RES, conjugate=False, eps_end=None):
    """OBJ text of the sampled piece: vertices in row-major order, quad faces."""
    from .surface import build_graph_piece
    from .weierstrass import SurfaceParams

    sp = SurfaceParams(theta, alpha)
    mesh = build_graph_piece(sp, resolution, conjugate=conjugate, eps_end=eps_end)
    lines = [f"# kmrstrip {'conjugate' if conjugate else 'graph'} piece",
             f"# theta {sp.theta:.9g} alpha {sp.alpha:.9g} res {resolution[0]}x{resolution[1]} "
             f"eps_end {mesh.eps_end:.9g}"]
    fmt = "v {:.8e} {:.8e} {:.8e}"
    for x, y, z in mesh.points():
        lines.append(fmt.format(x + 0.0, y + 0.0, z + 0.0))
    for q in mesh.quads() + 1:
        lines.append("f {} {} {} {}".format(*q))
    return "\n".join(lines) + "\n"


def cmd_solve(h, a, tol=1e-6):
    from .solver import solve_strip

    return solve_strip(h, a, tol=tol).as_dict()


def cmd_verify(theta, alpha, resolution=DEFAULT_RES, eps_end=None):
    from .graph import boundary_divergence_check, verify_graph
    from .surface import build_graph_piece
    from .weierstrass import SurfaceParams

    sp = SurfaceParams(theta, alpha)
    mesh = build_graph_piece(sp, resolution, eps_end=eps_end)
    rep = verify_graph(mesh)
    div = boundary_divergence_check(mesh)
    report = {"theta": sp.theta, "alpha": sp.alpha, "resolution": list(resolution),
              **rep.as_dict(), "boundary_divergence": div}
    report["ok"] = bool(rep.ok and div["ok"])
    return report, report["ok"]


def cmd_limits(regime, alpha=None):
    from .limits import limit_probe

    rep = limit_probe(regime, alpha=alpha)
    return rep.as_dict(), rep.ok


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _render(report, fmt):
    return dump_json(report) if fmt == "json" else dump_text(normalize_json(report))


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "params":
            report, ok = cmd_params(args.theta, args.alpha)
        elif args.command == "mesh":
            _emit(cmd_mesh(args.theta, args.alpha, args.res, args.conjugate, args.eps_end),
                  args.out)
            return EXIT_OK
        elif args.command == "solve":
            report, ok = cmd_solve(args.h, args.a, args.tol), True
        elif args.command == "verify":
            report, ok = cmd_verify(args.theta, args.alpha, args.res, args.eps_end)
        else:
            report, ok = cmd_limits(args.regime, args.alpha)
    except InfeasibleStripError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        if exc.best is not None:
            _emit(_render(exc.best.as_dict(), args.format), args.out)
        return EXIT_NONCONVERGENCE
    except (DomainError, KMRError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(_render(report, args.format), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None):
    sys.exit(run(argv))
