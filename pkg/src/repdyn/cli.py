"""Command-line front end.

Exit codes: 0 success or feasible, 1 valid but infeasible finding,
2 usage or parse error. Data goes to stdout or files, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import fileformat as ff
from .dynamics import BlowupError, integrate
from .explorer import sample_search
from .inverse import quantize, verify_round_trip
from .quadalgebra import SliceTooLarge, pbw_check
from .repcheck import Family, NoConvergence, fit_algebra, project_onto_constraint, representation_residual
from .symcalc import weyl_order

log = logging.getLogger("repdyn")

OK, INFEASIBLE, USAGE = 0, 1, 2


def _default_seed() -> int:
    raw = os.environ.get("REPDYN_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"REPDYN_SEED must be an integer, got {raw!r}") from None


def _print_report(rep, out=None):
    out = out or sys.stdout
    for k, r in enumerate(rep.per_relation_residuals):
        print(f"relation {k + 1}: residual {r:.17g}", file=out)
    print(f"max_residual {rep.max_residual:.17g}", file=out)
    print(f"pbw_pass {str(rep.pbw_pass).lower()}", file=out)
    print(f"feasible {str(rep.feasible).lower()}", file=out)


def cmd_weyl(args):
    print(weyl_order(args.exponents))
    return OK


def cmd_pbw(args):
    alg = ff.load_algebra(args.algebra)
    rep = pbw_check(alg, args.degree, exact_mode=args.exact)
    print("quotient_dims " + " ".join(map(str, rep.quotient_dims)))
    print("expected_dims " + " ".join(map(str, rep.expected_dims)))
    print(f"pass {str(rep.passed).lower()}")
    return OK if rep.passed else INFEASIBLE


def cmd_check_rep(args):
    alg = ff.load_algebra(args.algebra)
    X = ff.load_matrices(args.matrices)
    rep = representation_residual(alg, X, args.tol)
    _print_report(rep)
    return OK if rep.feasible else INFEASIBLE


def cmd_fit(args):
    X = ff.load_matrices(args.matrices)
    alg, rep = fit_algebra(X, Family.parse(args.family), args.tol)
    if args.out:
        ff.save_algebra(alg, args.out)
    else:
        sys.stdout.write(ff.dumps(ff.algebra_to_model(alg, ff.AlgebraFile)))
    _print_report(rep, sys.stderr if not args.out else sys.stdout)
    return OK if rep.feasible else INFEASIBLE


def cmd_project(args):
    alg = ff.load_algebra(args.algebra)
    X = ff.load_matrices(args.matrices)
    try:
        Y = project_onto_constraint(alg, X, args.tol, args.max_iter)
        code = OK
    except NoConvergence as exc:
        log.warning("%s", exc)
        Y = exc.best.X
        code = INFEASIBLE
    if args.out:
        ff.save_matrices(Y, args.out)
    else:
        sys.stdout.write(ff.dumps(ff.MatricesFile(matrices=[ff._mj(M) for M in Y])))
    rep = representation_residual(alg, Y, args.tol)
    print(f"max_residual {rep.max_residual:.17g}", file=sys.stderr)
    print(f"displacement {np.linalg.norm(Y - X):.17g}", file=sys.stderr)
    return code


def cmd_simulate(args):
    s = ff.load_scenario(args.scenario)
    if args.seed is not None:
        s = s.with_(seed=args.seed)
    try:
        tr = integrate(s)
    except BlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE
    ff.write_trajectory(tr, args.out)
    print(f"samples {len(tr.times)}", file=sys.stderr)
    print(f"max_residual {tr.max_residual:.17g}", file=sys.stderr)
    print(f"segments {tr.segment_ids[-1] + 1}", file=sys.stderr)
    if tr.first_infeasible is not None:
        print(f"first_infeasible_sample {tr.first_infeasible} t={tr.times[tr.first_infeasible]:.17g}", file=sys.stderr)
        return INFEASIBLE
    return OK


def cmd_quantize(args):
    system = ff.load_system(args.system)
    mats = ff.load_constants(args.const_matrices) if args.const_matrices else None
    template = quantize(system, args.n, args.const_mode, mats)
    if args.out:
        ff.save_template(template, args.out)
    else:
        sys.stdout.write(ff.dumps(ff.template_to_model(template)))
    return OK


def cmd_round_trip(args):
    template = ff.load_template(args.template)
    system = ff.load_system(args.system)
    seed = args.seed if args.seed is not None else _default_seed()
    rep = verify_round_trip(template, system, args.trials, seed)
    print(f"trials {rep.trials}")
    print(f"max_deviation {rep.max_deviation:.17g}")
    print(f"coefficients_exact {str(rep.coefficients_exact).lower()}")
    return OK if rep.passed else INFEASIBLE


def cmd_explore(args):
    spec = ff.load_search(args.search)
    seed = args.seed if args.seed is not None else _default_seed()
    cat = sample_search(spec, args.n, seed, workers=args.workers)
    ff.write_catalog(cat, args.out, seed)
    passing = sum(e.pbw_pass for e in cat.entries)
    print(f"entries {len(cat.entries)} pbw_pass {passing} truncated {str(cat.truncated).lower()}", file=sys.stderr)
    return INFEASIBLE if cat.truncated else OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="repdyn", description="Representative dynamics toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("weyl", help="print the Weyl ordering of a monomial")
    s.add_argument("exponents", nargs="+", type=int, help="exponent of each generator")
    s.set_defaults(func=cmd_weyl)

    s = sub.add_parser("pbw", help="degree-bounded PBW check of an algebra file")
    s.add_argument("algebra")
    s.add_argument("--degree", type=int, default=3)
    s.add_argument("--exact", action="store_true", help="exact rational elimination")
    s.set_defaults(func=cmd_pbw)

    s = sub.add_parser("check-rep", help="relation residuals of matrices for an algebra")
    s.add_argument("algebra")
    s.add_argument("matrices")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_check_rep)

    s = sub.add_parser("fit", help="fit structure constants to a matrix tuple")
    s.add_argument("matrices")
    s.add_argument("--family", default="B", help="subset of ABC (default B)")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("project", help="project matrices onto an algebra's representation set")
    s.add_argument("algebra")
    s.add_argument("matrices")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--out")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("simulate", help="integrate a scenario to a trajectory CSV")
    s.add_argument("scenario")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("quantize", help="quantize a scalar system into a dynamics template")
    s.add_argument("system")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--const-mode", choices=("scalar", "matrix"), default="scalar")
    s.add_argument("--const-matrices", help="constants file for matrix mode")
    s.add_argument("--out")
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("round-trip", help="verify a template against its scalar system")
    s.add_argument("template")
    s.add_argument("system")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=None, help="default: $REPDYN_SEED or 0")
    s.set_defaults(func=cmd_round_trip)

    s = sub.add_parser("explore", help="sampled search over quadratic algebras")
    s.add_argument("search")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--seed", type=int, default=None, help="default: $REPDYN_SEED or 0")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_explore)
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ff.FormatError, SliceTooLarge, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
