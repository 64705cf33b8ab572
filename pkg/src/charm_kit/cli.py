"""charm-kit command line.

Points are passed as ``re,im`` and ranges as ``a:b:n``; negative values may
follow the option directly (``--z -0.7,1.3``).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .approx import build_ladder, critical_tracking, sweep_csv
from .boundary import (
    angular_derivative,
    boundary_g_prime,
    boundary_g_prime_fd,
    boundary_m_prime,
    boundary_m_prime_fd,
    density_triple,
    log_poisson_check,
)
from .comb import GapSystem, akhiezer_levin_limit, extract_comb, green_map, martin_map, solve_mu_martin, widom_sum_gaps
from .errors import CharmError
from .green import eval_g, find_critical_points, widom_product
from .martin import condition_report, eval_m, find_martin_critical
from .moebius import enumerate_shells, load_config
from .runner import (
    canonical_json,
    emit,
    exit_code,
    jsonable,
    load_scenario,
    overall_status,
    run_scenario,
    verify_all,
)


def point(text: str) -> complex:
    try:
        re, im = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from exc
    return complex(re, im)


def x_range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b:n but got {text!r}") from exc


def points_list(text: str) -> list[complex]:
    return [point(p) for p in text.split(";") if p]


def levels_arg(text: str) -> list[list[int]]:
    return [[int(i) for i in lv.split(",") if i] for lv in text.split(";")]


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj, out=None):
    _write(canonical_json(jsonable(obj)), out)


def _csv(header, rows, out=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    _write(buf.getvalue(), out)


def _xs(args) -> list[float]:
    if args.x_range is not None:
        return [float(x) for x in args.x_range]
    if args.x is None:
        raise SystemExit("give --x or --x-range")
    return [args.x]


def _acc(args):
    config, policy = load_config(args.config)
    return enumerate_shells(config, policy)


# -- group side ------------------------------------------------------------------------

def cmd_green(args):
    acc = _acc(args)
    if args.action == "eval":
        _json(eval_g(acc, args.z, args.zstar), args.out)
    else:
        pts = find_critical_points(acc, args.zstar)
        wp = widom_product(pts)
        _json({"critical_points": pts, "widom_product": wp.product, "widom_sum": wp.log_sum}, args.out)


def cmd_martin(args):
    acc = _acc(args)
    if args.action == "eval":
        _json(eval_m(acc, args.z), args.out)
    elif args.action == "critical":
        _json({"critical_points": find_martin_critical(acc)}, args.out)
    else:
        _json(condition_report(acc, args.zstar), args.out)


def cmd_approx(args):
    config, policy = load_config(args.config)
    ladder = build_ladder(config, args.levels, policy)
    _write(sweep_csv(critical_tracking(ladder, args.zstar, args.z)), args.out)


def cmd_boundary(args):
    if args.action == "julia":
        zeros = points_list(args.zeros)
        rows = []
        for x in _xs(args):
            r = angular_derivative(zeros, x)
            rows.append([x, r.derivative, r.finite_difference])
        _csv(["x", "angular_derivative", "difference_quotient"], rows, args.out)
        return
    acc = _acc(args)
    if args.action == "logpoisson":
        lhs, rhs, err = log_poisson_check(acc, args.zstar, args.z)
        _json({"poisson_average": lhs, "log_density": rhs, "quad_error": err, "holds": lhs >= rhs - err}, args.out)
        return
    rows = []
    for x in _xs(args):
        if args.action == "gprime":
            rows.append([x, boundary_g_prime(acc, args.zstar, x), boundary_g_prime_fd(acc, args.zstar, x)])
        elif args.action == "mprime":
            rows.append([x, boundary_m_prime(acc, x), boundary_m_prime_fd(acc, x)])
        else:
            t = density_triple(acc, x)
            rows.append([x, t.rho, t.rho_i, t.phi_abs_sq])
    header = {"gprime": ["x", "series", "difference_quotient"],
              "mprime": ["x", "series", "difference_quotient"],
              "density": ["x", "rho", "rho_i", "phi_abs_sq"]}[args.action]
    _csv(header, rows, args.out)


# -- comb side ---------------------------------------------------------------------------

def cmd_comb(args):
    system = GapSystem.load(args.gaps)
    if args.action == "solve":
        gm, mm = green_map(system), martin_map(system, args.slope)
        _json({"green": gm.mu, "martin": mm.mu}, args.out)
    elif args.action == "params":
        _json(extract_comb(green_map(system)), args.out)
    elif args.action == "widom":
        _json(widom_sum_gaps(green_map(system), solve_mu_martin(system)), args.out)
    elif args.action == "akhiezer":
        _json(akhiezer_levin_limit(martin_map(system, args.slope)), args.out)
    else:
        cmap = green_map(system) if args.kind == "green" else martin_map(system, args.slope)
        if args.lam is not None:
            _json({"theta": cmap.theta(args.lam), "derivative": cmap.derivative(args.lam)}, args.out)
            return
        rows = []
        for x in _xs(args):
            t = cmap.theta(complex(x, args.y))
            rows.append([x, args.y, t.real, t.imag])
        _csv(["x", "y", "theta_re", "theta_im"], rows, args.out)


# -- scenarios ---------------------------------------------------------------------------

def cmd_run(args):
    report = run_scenario(load_scenario(args.scenario), args.threads)
    _write(emit(report.to_dict(timing=args.timing), args.format), args.out)
    print(f"{report.scenario}: {report.status} ({report.wall_time:.2f} s)", file=sys.stderr)
    return exit_code(report.status)


def cmd_verify(args):
    if not args.all:
        raise SystemExit("verify needs --all")
    doc, reports = verify_all(args.threads)
    if args.timing:
        doc["wall_time"] = {r.scenario: r.wall_time for r in reports}
    _write(emit(doc, args.format), args.out)
    for r in reports:
        print(f"{r.scenario}: {r.status} ({r.wall_time:.2f} s)", file=sys.stderr)
    return exit_code(overall_status(r.status for r in reports))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="charm-kit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"charm-kit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write to this file instead of stdout")

    g = sub.add_parser("green", help="complex Green function of the group")
    g.add_argument("action", choices=["eval", "critical"])
    g.add_argument("--config", required=True)
    g.add_argument("--z", type=point, default=complex(0.5, 1.5))
    g.add_argument("--zstar", type=point, default=1j)
    common(g)
    g.set_defaults(func=cmd_green)

    m = sub.add_parser("martin", help="complex Martin function of the group")
    m.add_argument("action", choices=["eval", "critical", "conditions"])
    m.add_argument("--config", required=True)
    m.add_argument("--z", type=point, default=complex(0.5, 1.5))
    m.add_argument("--zstar", type=point, default=1j)
    common(m)
    m.set_defaults(func=cmd_martin)

    a = sub.add_parser("approx", help="finitely generated approximations")
    a.add_argument("action", choices=["sweep"])
    a.add_argument("--config", required=True)
    a.add_argument("--levels", type=levels_arg, required=True, help='e.g. "0;0,1;0,1,2"')
    a.add_argument("--z", type=point, default=complex(0.5, 1.5))
    a.add_argument("--zstar", type=point, default=1j)
    common(a)
    a.set_defaults(func=cmd_approx)

    b = sub.add_parser("boundary", help="boundary identities")
    b.add_argument("action", choices=["julia", "gprime", "mprime", "density", "logpoisson"])
    b.add_argument("--config")
    b.add_argument("--zeros", help='Blaschke zeros "re,im;re,im" (julia)')
    b.add_argument("--x", type=float)
    b.add_argument("--x-range", type=x_range, help="a:b:n")
    b.add_argument("--z", type=point, default=complex(0.5, 1.5))
    b.add_argument("--zstar", type=point, default=1j)
    common(b)
    b.set_defaults(func=cmd_boundary)

    c = sub.add_parser("comb", help="comb maps of a gap system")
    c.add_argument("action", choices=["solve", "eval", "params", "widom", "akhiezer"])
    c.add_argument("--gaps", required=True)
    c.add_argument("--kind", choices=["green", "martin"], default="green")
    c.add_argument("--slope", type=float, default=1.0, help="(d_x M)(lambda*) of the Martin map")
    c.add_argument("--lam", type=point)
    c.add_argument("--x", type=float)
    c.add_argument("--x-range", type=x_range, help="a:b:n")
    c.add_argument("--y", type=float, default=0.0)
    common(c)
    c.set_defaults(func=cmd_comb)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--scenario", required=True)
    r.add_argument("--format", choices=["json", "csv"], default="json")
    r.add_argument("--threads", type=int)
    r.add_argument("--timing", action="store_true", help="include wall time (not byte-stable)")
    common(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the shipped scenario corpus")
    v.add_argument("--all", action="store_true", required=True)
    v.add_argument("--format", choices=["json", "csv"], default="json")
    v.add_argument("--threads", type=int)
    v.add_argument("--timing", action="store_true", help="include wall times (not byte-stable)")
    common(v)
    v.set_defaults(func=cmd_verify)
    return p


_VALUE_OPTIONS = {"--z", "--zstar", "--lam", "--x", "--x-range", "--y", "--slope", "--zeros"}


def _attach_negative_values(argv):
    """--z -0.7,1.3 -> --z=-0.7,1.3 so argparse does not read the value as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_attach_negative_values(argv))
    if getattr(args, "action", None) in ("gprime", "mprime", "density", "logpoisson") and not args.config:
        print("error: --config is required", file=sys.stderr)
        return 1
    if getattr(args, "action", None) == "julia" and not args.zeros:
        print("error: --zeros is required", file=sys.stderr)
        return 1
    try:
        code = args.func(args)
    except (CharmError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
