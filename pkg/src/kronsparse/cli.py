"""Command line: ``kronsparse {gen,solve,sweep,race,baseline-compare,validate}``.

Exit codes: 0 ok, 1 validation failure, 2 argument error, 3 I/O error,
4 solver divergence, 5 dimension mismatch.
"""

import argparse
import csv
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from threadpoolctl import threadpool_limits

from ._validation import DimensionError
from .bench import (BASELINE_COLUMNS, RACE_COLUMNS, SWEEP_COLUMNS, baseline_compare,
                    parse_lambda_grid, race, race_ordering, sweep)
from .dictionaries import make_dictionary, pair
from .io import FormatError, dump_json, read_matrix, write_ksmx
from .phantom import PRESETS, make_phantom, read_bundle, standard_desk_phantom, write_bundle
from .solvers import GREEDY, LASSO, SOLVERS, SolverConfig, SolverDivergence
from .validation import run_suites

EXIT_OK, EXIT_VALIDATION, EXIT_ARGS, EXIT_IO, EXIT_DIVERGENCE, EXIT_DIMENSION = range(6)


class UsageError(Exception):
    """Arguments parsed but are inconsistent."""


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _parse_shape(text):
    try:
        shape = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad shape {text!r}; use e.g. 16x16 or 16x16x8") from None
    if not 1 <= len(shape) <= 3 or min(shape) < 1:
        raise UsageError(f"shape {text!r} must have 1 to 3 positive sides")
    return shape


def _grid(text):
    try:
        return parse_lambda_grid(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    """Dictionary pair and signal from ``--bundle`` or the three matrix files."""
    if getattr(args, "bundle", None):
        sdict, S, _, _ = read_bundle(args.bundle)
        return sdict, S
    paths = [getattr(args, k, None) for k in ("gamma", "psi", "signal")]
    if not all(paths):
        raise UsageError("give --bundle or all of --gamma, --psi and --signal")
    gamma, psi, S = (read_matrix(p) for p in paths)
    return pair(make_dictionary(gamma, Path(paths[0]).stem),
                make_dictionary(psi, Path(paths[1]).stem)), S


def _config(args, **extra):
    kw = {}
    for arg, key in (("eps", "epsilon"), ("max_iter", "max_iter"), ("mu", "mu"), ("eta", "eta")):
        v = getattr(args, arg, None)
        if v is not None:
            kw[key] = v
    kw.update(extra)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands -----------------------------------------------------------------

def cmd_gen(args):
    if args.preset:
        sdict, S, C, spec = standard_desk_phantom(args.preset, snr=args.snr,
                                                  seed=args.seed or 0)
    else:
        if args.g is None or args.shape is None or args.k is None:
            raise UsageError("give --preset or all of --g, --shape and --k")
        shape = _parse_shape(args.shape)
        snr = 30.0 if args.snr is None else args.snr
        n_gamma = args.n_gamma or 2 * args.g
        try:
            sdict, S, C, spec = make_phantom(shape, args.g, n_gamma, args.k, snr=snr,
                                             seed=args.seed or 0, spatial=args.spatial,
                                             levels=args.levels)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    write_bundle(args.out, sdict, S, C, spec)
    _print_json(spec.to_json())
    return EXIT_OK


def cmd_solve(args):
    algo = args.algo
    if algo in LASSO and args.lam is None:
        raise UsageError(f"--lambda is required for {algo}")
    if algo in GREEDY and args.k is None:
        raise UsageError(f"--k is required for {algo}")
    sdict, S = _load(args)
    config = _config(args, lam=args.lam if args.lam is not None else 0.0, K=args.k)
    code, report = SOLVERS[algo](sdict, S, config)
    if not args.timing:
        report.wall_time = report.precompute_time = 0.0
    out = Path(args.out)
    write_ksmx(out, code.coef)
    dump_json(out.with_name(out.name + ".support.json"), code.support_json())
    payload = report.to_json(config)
    if args.report:
        dump_json(args.report, payload)
    _print_json({k: payload[k] for k in ("algorithm", "iterations", "objective", "sparsity",
                                         "atoms_per_voxel", "termination")})
    return EXIT_OK


def cmd_sweep(args):
    sdict, S = _load(args)
    lambdas = _grid(args.lambda_grid)
    if args.algo not in LASSO:
        raise UsageError(f"sweep needs one of {', '.join(LASSO)}")
    rows, summary = sweep(sdict, S, args.algo, lambdas, _config(args), timing=args.timing)
    write_rows(args.out, SWEEP_COLUMNS, rows)
    dump_json(Path(args.out).with_suffix(".summary.json"), summary)
    _print_json(summary)
    return EXIT_OK


def cmd_race(args):
    sdict, S = _load(args)
    if args.lambda_grid:
        lambdas = _grid(args.lambda_grid)
    elif args.lam is not None:
        lambdas = [args.lam]
    else:
        raise UsageError("give --lambda or --lambda-grid")
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in LASSO]
    if bad or not algos:
        raise UsageError(f"--algos must name LASSO solvers ({', '.join(LASSO)})")
    if not args.target_rel_err > 0:
        raise UsageError("--target-rel-err must be positive")
    rows = race(sdict, S, lambdas, algos, args.target_rel_err, _config(args),
                parallel=args.parallel, timing=args.timing)
    out = Path(args.out)
    write_rows(out, RACE_COLUMNS, rows)
    ordering = race_ordering(rows)
    payload = {"schema_version": 1, "target_rel_err": args.target_rel_err,
               "rows": rows,
               "ordering_fista_dadmm_admm": [{"lambda": k, "holds": v}
                                             for k, v in ordering.items()]}
    dump_json(out.with_suffix(".json"), payload)
    _print_json(payload["ordering_fista_dadmm_admm"])
    return EXIT_OK


def cmd_baseline_compare(args):
    sdict, S = _load(args)
    lambdas = _grid(args.lambda_grid)
    try:
        rows = baseline_compare(sdict, S, lambdas, args.algo, _config(args),
                                timing=args.timing)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_rows(args.out, BASELINE_COLUMNS, rows)
    held = [r["bound_holds"] for r in rows if r["bound_holds"] is not None]
    _print_json({"identity_rows_below_one_atom": len(held), "bound_holds": all(held)})
    return EXIT_OK


def cmd_validate(args):
    report = run_suites(args.level, fixture_dir=args.fixture)
    if args.out:
        dump_json(args.out, report)
    _print_json(report)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


# -- parser -------------------------------------------------------------------

def _add_input(p):
    p.add_argument("--bundle", help="phantom bundle directory")
    p.add_argument("--gamma", help="angular dictionary (KSMX or CSV)")
    p.add_argument("--psi", help="spatial dictionary (KSMX or CSV)")
    p.add_argument("--signal", help="signal matrix (KSMX or CSV)")


def _add_solver_opts(p):
    p.add_argument("--eps", type=float, help="stopping tolerance")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--mu", type=float, help="ADMM penalty")
    p.add_argument("--eta", type=float, help="dual ADMM penalty")
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="write zero wall times so outputs are byte-stable")


def build_parser():
    parser = argparse.ArgumentParser(prog="kronsparse",
                                     description="Separable spatial-angular sparse coding.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a phantom bundle")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--g", type=int, help="angular samples")
    p.add_argument("--shape", help="spatial grid, e.g. 16x16")
    p.add_argument("--k", type=int, help="planted nonzeros")
    p.add_argument("--n-gamma", type=int, help="angular atoms (default 2G)")
    p.add_argument("--spatial", choices=("haar", "dct"), default="haar")
    p.add_argument("--levels", type=int)
    p.add_argument("--snr", type=float, help="signal to noise ratio; inf for none")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one solver")
    _add_input(p)
    p.add_argument("--algo", choices=sorted(SOLVERS), required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--k", type=int, help="atom budget for greedy solvers")
    _add_solver_opts(p)
    p.add_argument("--out", required=True, help="code output (KSMX)")
    p.add_argument("--report", help="report output (JSON)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve along a lambda grid")
    _add_input(p)
    p.add_argument("--algo", choices=LASSO, default="fista")
    p.add_argument("--lambda-grid", required=True,
                   help='"base^a..base^b:count" or a comma separated list')
    _add_solver_opts(p)
    p.add_argument("--out", required=True, help="CSV output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("race", help="iterations to reach a reference minimum")
    _add_input(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-grid")
    p.add_argument("--target-rel-err", type=float, default=1e-4)
    p.add_argument("--algos", default="admm,dadmm,fista")
    p.add_argument("--parallel", type=int, default=1, help="concurrent race cells")
    _add_solver_opts(p)
    p.add_argument("--out", required=True, help="CSV output; JSON goes next to it")
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("baseline-compare", help="joint dictionary against identity psi")
    _add_input(p)
    p.add_argument("--algo", choices=LASSO, default="fista")
    p.add_argument("--lambda-grid", required=True)
    _add_solver_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline_compare)

    p = sub.add_parser("validate", help="run the invariant suites")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--fixture", help="directory of KSMX files that must load cleanly")
    p.add_argument("--out", help="JSON report output")
    p.set_defaults(func=cmd_validate)
    return parser


def _thread_limit():
    value = os.environ.get("KRONSPARSE_THREADS")
    if not value:
        return nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"KRONSPARSE_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise UsageError("KRONSPARSE_THREADS must be at least 1")
    return threadpool_limits(limits=n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad syntax
    if getattr(args, "parallel", 1) < 1:
        parser.error("--parallel must be at least 1")
    try:
        limit = _thread_limit()
        if getattr(args, "parallel", 1) > 1:
            limit = threadpool_limits(limits=1)  # one BLAS thread per race cell
        with limit:
            return args.func(args)
    except UsageError as exc:
        print(f"kronsparse: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except DimensionError as exc:
        print(f"kronsparse: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except SolverDivergence as exc:
        print(f"kronsparse: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, FormatError) as exc:
        print(f"kronsparse: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"kronsparse: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
