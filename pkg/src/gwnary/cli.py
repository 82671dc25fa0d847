"""Command-line interface.

    gwnary gamma     --spec geometric:p=0.8 --N 2
    gwnary critical  --family poisson --N 2
    gwnary survival  --spec one-or-many:p=0.8888888888888888,r=3 --N 2 --t-max 10000
    gwnary simulate  --spec poisson:m=3.35 --N 2 --t 5 --trials 100000 --seed 1
    gwnary validate

Exit codes: 0 ok, 1 validation failure, 2 bad arguments or spec, 3 solver
failure, 4 no threshold in range, 5 degenerate root, 6 too many Monte Carlo
trials over the node budget.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from gwnary import critical, errors
from gwnary.mc import NODE_BUDGET, McConfig, estimate_gamma_nt
from gwnary.offspring import parse_spec
from gwnary.solve import TOL, smallest_root
from gwnary.subtree_gf import SubtreeGF
from gwnary.survival import T_MAX, fit_asymptote, iterate_survival, law_prediction
from gwnary.validation import run_checks

EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_NO_SIGN_CHANGE = 4
EXIT_DEGENERATE = 5
EXIT_BUDGET = 6


def _dumps(obj):
    # repr-based float output is the shortest string that round-trips
    return json.dumps(obj, indent=2, allow_nan=False)


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _gf(args):
    return SubtreeGF(parse_spec(args.spec), args.N, allow_trivial=True)


def cmd_gamma(args):
    report = smallest_root(_gf(args), args.tol)
    _emit(_dumps(report.to_dict()) + "\n", args.out)
    return 0


def _family(args):
    if args.family == "geometric":
        return critical.geometric_family()
    if args.family == "poisson":
        return critical.poisson_family()
    if args.family == "one-or-many":
        return critical.one_or_many_family(args.r)
    return critical.binomial_family(args.n)


def cmd_critical(args):
    family = _family(args)
    lo = args.lo if args.lo is not None else family.default_range[0]
    hi = args.hi if args.hi is not None else family.default_range[1]
    report = critical.find_critical(family, args.N, (lo, hi))
    _emit(_dumps(report.to_dict()) + "\n", args.out)
    return 0


def _curve_csv(curve, fit, root):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "gamma_Nt", "cond_survival", "law_prediction"])
    predictions = law_prediction(fit, root, range(curve.t_max + 1))
    for t in range(curve.t_max + 1):
        pred = "" if math.isnan(predictions[t]) else repr(float(predictions[t]))
        writer.writerow([t, repr(float(curve.gamma_seq[t])), repr(float(curve.cond_survival[t])), pred])
    return buf.getvalue()


def cmd_survival(args):
    gf = _gf(args)
    root = smallest_root(gf, args.tol)
    curve = iterate_survival(gf, root, args.t_max)
    fit = fit_asymptote(curve, root)
    summary = {"root": root.to_dict(), "fit": fit.to_dict()}
    if args.format == "json":
        summary["curve"] = curve.to_dict()
        _emit(_dumps(summary) + "\n", args.out)
        return 0
    _emit(_curve_csv(curve, fit, root), args.out)
    if args.fit_out:
        with open(args.fit_out, "w") as fh:
            fh.write(_dumps(summary) + "\n")
    else:
        sys.stderr.write(_dumps(summary) + "\n")
    return 0


def cmd_simulate(args):
    cfg = McConfig(
        spec=parse_spec(args.spec),
        N=args.N,
        t=args.t,
        n_trials=args.trials,
        seed=args.seed,
        node_budget=args.node_budget,
    )
    _emit(_dumps(estimate_gamma_nt(cfg).to_dict()) + "\n", args.out)
    return 0


def cmd_validate(args):
    results = run_checks(args.only)
    for result in results:
        print(result.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VALIDATION if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="gwnary", description="Complete N-ary subtrees of Galton-Watson trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("--spec", required=True, help='offspring law, e.g. "geometric:p=0.8" or "finite:0.2,0.3,0.5"')
        p.add_argument("--N", type=int, required=True, help="arity of the subtree (N >= 1)")
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("gamma", help="smallest root gamma_N with a_N, b_N and class")
    common(p)
    p.add_argument("--tol", type=float, default=TOL)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("critical", help="critical parameter of a one-parameter family")
    p.add_argument("--family", required=True, choices=["geometric", "poisson", "one-or-many", "binomial"])
    p.add_argument("--r", type=int, default=3, help="many-children count for one-or-many")
    p.add_argument("--n", type=int, default=9, help="number of trials for binomial")
    p.add_argument("--lo", type=float, help="lower end of the parameter range")
    p.add_argument("--hi", type=float, help="upper end of the parameter range")
    common(p, spec=False)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("survival", help="conditional survival curve and its tail law")
    common(p)
    p.add_argument("--t-max", dest="t_max", type=int, default=T_MAX)
    p.add_argument("--tol", type=float, default=TOL)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--fit-out", dest="fit_out", help="JSON fit summary path (csv format; default stderr)")
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of gamma_{N,t}")
    common(p)
    p.add_argument("--t", type=int, required=True, help="subtree height")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--node-budget", dest="node_budget", type=int, default=NODE_BUDGET)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="reproduce the reference values")
    p.add_argument("--only", type=int, nargs="+", help="run only these check numbers")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (errors.SpecError, errors.DomainError, ValueError) as exc:
        code = EXIT_PARSE
        if isinstance(exc, errors.NoSignChangeError):
            code = EXIT_NO_SIGN_CHANGE
        elif isinstance(exc, errors.DegenerateRootError):
            code = EXIT_DEGENERATE
        elif isinstance(exc, (errors.InvalidToleranceError, errors.WindowTooSmallError,
                              errors.ClassMismatchError)):
            code = EXIT_SOLVER
        print(f"gwnary: error: {exc}", file=sys.stderr)
        return code
    except errors.DegenerateEstimateError as exc:
        print(f"gwnary: error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (errors.NonConvergenceError, errors.InconsistencyError) as exc:
        print(f"gwnary: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
