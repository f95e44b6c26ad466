"""Command-line entry point: ``stickconv <subcommand> ...``.

Exit codes: 0 pass, 1 a check failed, 2 bad usage or input, 3 numeric failure.
Every failure writes one JSON line to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import betainc

from . import holroyd, hoperator
from ._exact import fmt_value, to_fraction
from .fractional import ConvergenceError
from .grid import GridFunction, open_output, write_columns
from .measures import Beta, MeasureError, MomentVector, binomial_complement, moments, parse_measure
from .moments import (
    HalfNotIdentifiable,
    NearSingularError,
    forward_z_moments,
    pivot,
    prop22_residual,
    reconstruct,
)
from .nonunique import (
    ConstructionError,
    PerturbationFn,
    construct_fractional,
    construct_gem2,
    default_perturbation,
    verify_nonuniqueness,
)
from .partition import (
    DEFAULT_TOL,
    ConvolutionSampleConfig,
    NonTerminationError,
    sample_bernoulli_convolution,
    sample_partition,
    write_z_csv,
)
from .stats import ks_one_sample

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

GNUPLOT_HINTS = {
    "sample-partition": "set datafile separator ','; plot '{out}' every ::1 using 1:2 with impulses title 'parts'",
    "sample-z": "set datafile separator ','; binwidth=0.01; plot '{out}' using (binwidth*floor($1/binwidth)):(1.0) smooth freq with boxes",
    "z-moments": "set datafile separator ','; set logscale y; plot '{out}' using 1:2 with linespoints title 'E[Z^n]'",
    "reconstruct": "set datafile separator ','; plot '{out}' using 1:2 with linespoints title 'b_n'",
    "construct": "set datafile separator ','; plot '{out}' using 1:2 with lines title 'rho'",
    "holroyd": "set datafile separator ','; plot '{out}' using 1:2 with lines",
    "holroyd-density": "set datafile separator ','; set view map; splot '{out}' using 1:2:3 with points palette pt 5 ps 0.3",
}


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, report):
        super().__init__("check failed")
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _rational(text):
    try:
        return to_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rational_list(text):
    return [_rational(t) for t in text.split(",") if t.strip()]


def _measure(text):
    try:
        return parse_measure(text)
    except (MeasureError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# --------------------------------------------------------------------------
# output


def _emit_json(obj, args):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit(args, payload, write_csv):
    """Write ``payload`` as JSON or call ``write_csv(stream)``."""
    if args.format == "json":
        _emit_json(payload, args)
    elif args.out:
        with open_output(args.out) as fh:
            write_csv(fh)
    else:
        write_csv(sys.stdout)
    if args.gnuplot_hint:
        key = args.hint_key if hasattr(args, "hint_key") else args.command
        print(GNUPLOT_HINTS[key].format(out=args.out or "data.csv"), file=sys.stderr)


def _z_moment_vector(args):
    if args.moments:
        return MomentVector.from_json(json.loads(Path(args.moments).read_text()))
    if args.z is None:
        raise UsageError("give the Z law with --z SPEC or --moments FILE")
    mu = args.z
    arith = "rational" if args.exact else "float"
    return moments(mu, args.order, arith)


# --------------------------------------------------------------------------
# subcommands


def cmd_sample_partition(args):
    part = sample_partition(args.measure, args.tol, args.seed)
    payload = {
        "parts": [float(x) for x in part.parts],
        "remainder": part.remainder,
        "truncation_tol": part.truncation_tol,
    }
    _emit(args, payload, part.to_csv)
    return EXIT_PASS


def cmd_sample_z(args):
    cfg = ConvolutionSampleConfig(args.p, args.samples, args.seed, args.tol)
    z = sample_bernoulli_convolution(args.measure, cfg, args.workers)
    _emit(args, {"z": z.tolist()}, lambda fh: write_z_csv(fh, z))
    return EXIT_PASS


def cmd_z_moments(args):
    arith = "rational" if args.exact else "float"
    mv = forward_z_moments(args.measure, args.p, args.order, arith)
    _emit(args, mv.to_json(), lambda fh: _write_moments(fh, mv))
    return EXIT_PASS


def _write_moments(fh, mv):
    fh.write("n,moment\n")
    for n, v in enumerate(mv):
        fh.write(f"{n},{fmt_value(v)}\n")


def cmd_reconstruct(args):
    zm = _z_moment_vector(args)
    rep = reconstruct(zm, args.p, args.order)
    _emit(args, rep.to_json(), lambda fh: _write_b_table(fh, rep))
    return EXIT_PASS


def _write_b_table(fh, rep):
    fh.write("n,b_n,pivot_n\n")
    for n, b in enumerate(rep.b):
        piv = "" if n == 0 else fmt_value(rep.pivots[n])
        fh.write(f"{n},{fmt_value(b)},{piv}\n")


def _perturbation(args):
    if args.coeffs:
        coeffs = tuple(_rational_list(args.coeffs))
        return PerturbationFn(coeffs, None if args.delta is None else float(args.delta))
    return default_perturbation(None if args.delta is None else float(args.delta))


def _read_half_function(path):
    if path:
        return GridFunction.from_csv(path)
    return GridFunction.from_function(lambda x: x, 1025, 0.0, 0.5)


def cmd_construct(args):
    if args.family == "gem2":
        built = construct_gem2(_read_half_function(args.f))
    else:
        eps = None if args.unperturbed else _perturbation(args)
        built = construct_fractional(args.theta, eps, args.nodes)
    meta = built.metadata()
    if args.out:
        built.rho.to_csv(args.out, header=("x", "density"))
        Path(str(args.out) + ".json").write_text(json.dumps(meta, indent=2) + "\n")
        if args.format == "json":
            sys.stdout.write(json.dumps(meta, indent=2) + "\n")
    elif args.format == "json":
        sys.stdout.write(json.dumps(meta, indent=2) + "\n")
    else:
        built.rho.to_csv(sys.stdout, header=("x", "density"))
    if args.gnuplot_hint:
        print(GNUPLOT_HINTS["construct"].format(out=args.out or "rho.csv"), file=sys.stderr)
    return EXIT_PASS


def _verify_gem_beta(args):
    ps = args.p or [Fraction(1, 4)]
    if len(ps) != 1:
        raise UsageError("verify --case gem-beta takes a single --p")
    th, p = args.theta, ps[0]
    stick = Beta(1, th)
    fwd = forward_z_moments(stick, p, args.order, "rational")
    target = moments(Beta(p * th, (1 - p) * th), args.order, "rational")
    exact_ok = fwd.values == target.values
    cfg = ConvolutionSampleConfig(p, args.samples, args.seed)
    z = sample_bernoulli_convolution(stick, cfg, args.workers)
    a, b = float(p * th), float((1 - p) * th)
    ks = ks_one_sample(z, lambda t: betainc(a, b, np.clip(t, 0.0, 1.0)), args.alpha)
    return {
        "case": "gem-beta",
        "theta": fmt_value(th),
        "p": fmt_value(p),
        "exact_moments": {"order": args.order, "pass": exact_ok},
        "monte_carlo": ks.to_json(),
        "pass": bool(exact_ok and ks.passed),
    }


def _verify_nonunique(args):
    if args.family == "gem2" or args.f:
        built = construct_gem2(_read_half_function(args.f))
        theta = 2
    else:
        built = construct_fractional(args.theta, _perturbation(args), args.nodes)
        theta = args.theta
    rep = verify_nonuniqueness(built, theta, order=args.order, mc_samples=args.samples, seed=args.seed,
                               workers=args.workers, alpha=args.alpha)
    out = {"case": "nonunique", "construction": built.metadata()}
    out.update(rep.to_json())
    return out


def _verify_holroyd(args):
    ps = args.p or [Fraction(3, 10), Fraction(1, 2), Fraction(7, 10)]
    for p in ps:
        if not 0 < p < 1:
            raise UsageError(f"p must lie in (0, 1), got {p}")
    rep = holroyd.verify_counterexample(ps=ps, resolution=args.resolution, eta=args.eta)
    out = {"case": "holroyd", "p": [fmt_value(p) for p in ps]}
    out.update(rep.to_json())
    return out


def _verify_prop22(args):
    ps = args.p or [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
    try:
        mu, arith = moments(args.measure, args.order, "rational"), "rational"
    except MeasureError:
        mu, arith = moments(args.measure, args.order, "float"), "float"
    rows, ok = [], True
    for p in ps:
        z = forward_z_moments(mu, p, args.order, arith)
        res = [prop22_residual(mu, z, p, n) for n in range(1, args.order + 1)]
        worst = max(abs(r) for r in res)
        good = worst == 0 if arith == "rational" else float(worst) <= 1e-12
        ok &= good
        rows.append({"p": fmt_value(p), "max_abs_residual": fmt_value(worst), "pass": bool(good)})
    return {"case": "prop22", "measure": str(args.measure), "arithmetic": arith, "results": rows, "pass": bool(ok)}


def _verify_pivots(args):
    ps = args.p or [Fraction(1, 10), Fraction(1, 4), Fraction(2, 5), Fraction(3, 5), Fraction(9, 10)]
    zm = _z_moment_vector(args)
    symmetric = zm.exact and list(zm.values) == binomial_complement(zm.values)
    rows, ok = [], True
    for p in ps:
        piv = [pivot(zm, p, n) for n in range(2, args.order + 1)]
        if p == Fraction(1, 2):
            if not symmetric:
                raise UsageError("the p = 1/2 pivot pattern is only defined for symmetric Z")
            good = all((v == 0) if n % 2 else (v > 0) for n, v in zip(range(2, args.order + 1), piv))
        else:
            good = all(v != 0 for v in piv)
        ok &= good
        rows.append({"p": fmt_value(p), "pivots": [fmt_value(v) for v in piv], "pass": bool(good)})
    return {"case": "pivots", "z_symmetric": bool(symmetric), "results": rows, "pass": bool(ok)}


VERIFY_CASES = {
    "gem-beta": _verify_gem_beta,
    "nonunique": _verify_nonunique,
    "holroyd": _verify_holroyd,
    "prop22": _verify_prop22,
    "pivots": _verify_pivots,
}


def cmd_verify(args):
    if args.case == "pivots" and args.z is None and not args.moments:
        raise UsageError("verify --case pivots needs --z SPEC or --moments FILE")
    report = VERIFY_CASES[args.case](args)
    _emit_json(report, args)
    if not report["pass"]:
        raise CheckFailed(report)
    return EXIT_PASS


def cmd_holroyd(args):
    f, g, eta = holroyd.build_reference(eta=args.eta)
    dens = {"reference": f, "perturbed": holroyd.perturbed(f, g, eta)}[args.density]
    if args.what == "density":
        x1, x2, v = dens.to_grid(args.resolution)
        payload = {"x1": x1.tolist(), "x2": x2.tolist(), "value": v.tolist()}
        args.hint_key = "holroyd-density"
        _emit(args, payload, lambda fh: write_columns(fh, ("x1", "x2", "value"), [x1, x2, v]))
        return EXIT_PASS
    if args.what == "marginal":
        gf = holroyd.marginal(dens, args.direction, args.resolution)
        header = ("x", "density")
    else:
        if args.p is None:
            raise UsageError("holroyd --what cdf needs --p")
        gf = holroyd.z_distribution(dens, args.p, args.resolution)
        header = ("z", "cdf")
    payload = {header[0]: gf.nodes.tolist(), header[1]: gf.values.tolist()}
    _emit(args, payload, lambda fh: gf.to_csv(fh, header=header))
    return EXIT_PASS


# --------------------------------------------------------------------------
# parser


def _common():
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--out", default=None, help="output path (default: stdout)")
    c.add_argument("--gnuplot-hint", action="store_true", help="print a gnuplot recipe on stderr")
    return c


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stickconv", description="Bernoulli convolutions of stick-breaking partitions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    sp = sub.add_parser("sample-partition", parents=[common], help="draw one stick-breaking partition")
    sp.add_argument("--measure", type=_measure, required=True, help="stick law, e.g. beta:1,2")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.set_defaults(run=cmd_sample_partition)

    sp = sub.add_parser("sample-z", parents=[common], help="Monte Carlo draws of Z")
    sp.add_argument("--measure", type=_measure, required=True)
    sp.add_argument("--p", type=_rational, required=True)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.set_defaults(run=cmd_sample_z)

    sp = sub.add_parser("z-moments", parents=[common], help="moments of Z from the stick law")
    sp.add_argument("--measure", type=_measure, required=True)
    sp.add_argument("--p", type=_rational, required=True)
    sp.add_argument("--order", type=int, default=15)
    sp.add_argument("--exact", action="store_true", help="rational arithmetic")
    sp.set_defaults(run=cmd_z_moments)

    sp = sub.add_parser("reconstruct", parents=[common], help="recover stick moments from Z moments")
    sp.add_argument("--z", type=_measure, default=None, help="law of Z as a measure spec")
    sp.add_argument("--moments", default=None, help="moment-vector JSON file instead of --z")
    sp.add_argument("--p", type=_rational, required=True)
    sp.add_argument("--order", type=int, default=15)
    sp.add_argument("--exact", action="store_true")
    sp.set_defaults(run=cmd_reconstruct)

    sp = sub.add_parser("construct", parents=[common], help="build a stick law with Beta-matching Bernoulli(1/2) convolution")
    sp.add_argument("--family", choices=("gem2", "fractional"), required=True)
    sp.add_argument("--f", default=None, help="gem2: CSV x,value on [0, 1/2] (default f(x) = x)")
    sp.add_argument("--theta", type=_rational, default=Fraction(3))
    sp.add_argument("--delta", type=_rational, default=None, help="fractional: perturbation amplitude")
    sp.add_argument("--coeffs", default=None, help="fractional: perturbation polynomial c1,c2,... (no constant term)")
    sp.add_argument("--unperturbed", action="store_true", help="fractional: eps = 0")
    sp.add_argument("--nodes", type=int, default=hoperator.DEFAULT_NODES)
    sp.set_defaults(run=cmd_construct)

    sp = sub.add_parser("verify", parents=[common], help="run a verification case; exit 0 iff it passes")
    sp.add_argument("--case", choices=sorted(VERIFY_CASES), required=True)
    sp.add_argument("--theta", type=_rational, default=Fraction(3))
    sp.add_argument("--p", type=_rational_list, default=None, help="one p or a comma-separated list")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--order", type=int, default=15)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--measure", type=_measure, default=Beta(1, 3), help="prop22: stick law")
    sp.add_argument("--z", type=_measure, default=None, help="pivots: law of Z")
    sp.add_argument("--moments", default=None)
    sp.add_argument("--family", choices=("gem2", "fractional"), default="fractional")
    sp.add_argument("--f", default=None)
    sp.add_argument("--delta", type=_rational, default=None)
    sp.add_argument("--coeffs", default=None)
    sp.add_argument("--nodes", type=int, default=hoperator.DEFAULT_NODES)
    sp.add_argument("--eta", type=_rational, default=Fraction(1))
    sp.add_argument("--resolution", type=int, default=361)
    sp.set_defaults(run=cmd_verify, exact=True)

    sp = sub.add_parser("holroyd", parents=[common], help="artifacts of the three-part counterexample")
    sp.add_argument("--what", choices=("density", "marginal", "cdf"), default="marginal")
    sp.add_argument("--density", choices=("reference", "perturbed"), default="reference")
    sp.add_argument("--direction", choices=holroyd.DIRECTIONS, default="X1")
    sp.add_argument("--p", type=_rational, default=None)
    sp.add_argument("--eta", type=_rational, default=Fraction(1))
    sp.add_argument("--resolution", type=int, default=361)
    sp.set_defaults(run=cmd_holroyd)
    return parser


def _fail(code, kind, message, **extra):
    obj = {"error": kind, "message": str(message), "exit_code": code}
    obj.update(extra)
    sys.stderr.write(json.dumps(obj) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be at least 1")
        return args.run(args)
    except CheckFailed:
        return _fail(EXIT_FAIL, "check_failed", "verification failed; see the report on stdout")
    except HalfNotIdentifiable as exc:
        return _fail(EXIT_USAGE, "not_identifiable", exc)
    except (NearSingularError, ConvergenceError, NonTerminationError, hoperator.NonMemberError, ConstructionError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc)
    except (UsageError, MeasureError, holroyd.GeometryError, ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (ArithmeticError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
