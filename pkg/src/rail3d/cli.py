"""Command-line front end: ``rail3d run | converge | selftest``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ContractError, SolverError
from .imex import SCHEMES
from .integrator import TRUNCATION_KINDS
from .problems import PROBLEM_IDS

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_SOLVER = 3
EXIT_SELFTEST = 1


def _add_run_options(p):
    p.add_argument("--problem", required=True, choices=PROBLEM_IDS)
    p.add_argument("--scheme", choices=SCHEMES, help="IMEX scheme (default: per problem)")
    p.add_argument("--n", type=int, default=64, help="grid points per dimension")
    p.add_argument("--tol", type=float, help="truncation tolerance epsilon")
    p.add_argument("--tf", type=float, help="final time")
    p.add_argument("--trunc", choices=[k for k in TRUNCATION_KINDS if k != "none"])
    p.add_argument("--weight-s", type=float, help="LoMaC weight steepness s")
    p.add_argument("--d", type=float, help="override the diffusion coefficient")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="rail3d", description="Low-rank IMEX integrator benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate one benchmark and write history.csv / summary.json")
    _add_run_options(run)
    run.add_argument("--lambda", dest="lam", type=float, help="CFL factor")
    run.add_argument("--snapshot", help="write the final solution as a TUCK3 file")

    conv = sub.add_parser("converge", help="fit the temporal order over a lambda sweep")
    _add_run_options(conv)
    conv.add_argument("--lambdas", required=True, help="comma-separated CFL factors")

    test = sub.add_parser("selftest", help="run the quick oracle checks")
    test.add_argument("--seed", type=int, default=0)
    return parser


def _threads():
    env = os.environ.get("RAIL3D_THREADS")
    if env is None:
        return None
    try:
        val = int(env)
    except ValueError:
        raise ContractError(f"RAIL3D_THREADS must be an integer, got {env!r}") from None
    if val < 1:
        raise ContractError(f"RAIL3D_THREADS must be >= 1, got {val}")
    return val


def _config(args, lam=None):
    from .bench import ExperimentConfig

    return ExperimentConfig(
        problem=args.problem, scheme=args.scheme, n=args.n, lam=lam, tol=args.tol, tf=args.tf,
        trunc=args.trunc, weight_s=args.weight_s, d=args.d, out=args.out, seed=args.seed,
        threads=_threads(),
    )


def _run(args):
    from .bench import run_experiment
    from .snapshot import save

    final = {}

    def keep(rec, u):
        final["u"] = u

    _, summary = run_experiment(_config(args, args.lam), callback=keep)
    if args.snapshot and "u" in final:
        save(args.snapshot, final["u"])
    print(json.dumps(summary, indent=2))


def _converge(args):
    from .bench import convergence_study

    try:
        lams = [float(x) for x in args.lambdas.split(",") if x.strip()]
    except ValueError:
        raise ContractError(f"cannot parse --lambdas {args.lambdas!r}") from None
    report = convergence_study(_config(args), lams, out=args.out)
    print(json.dumps(report, indent=2))


def _selftest(args):
    from .selftest import run_all

    failures = run_all(seed=args.seed, stream=sys.stdout)
    return EXIT_SELFTEST if failures else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            _run(args)
        elif args.command == "converge":
            _converge(args)
        else:
            return _selftest(args)
    except ContractError as exc:
        print(f"rail3d: contract error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except SolverError as exc:
        print(f"rail3d: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
