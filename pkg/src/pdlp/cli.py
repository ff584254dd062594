"""Command line entry point: ``pdlp solve | generate | check``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from pdlp.convergence import Tolerances, check_termination, kkt_residuals
from pdlp.generate import KINDS, generate_instance
from pdlp.mps import MpsError, read_mps, write_mps
from pdlp.output import SolutionIOError, read_solution, write_solution
from pdlp.pdhg import NumericalError
from pdlp.problem import InvalidProblemError
from pdlp.solver import SolverOptions, Status, solve

EXIT_OPTIMAL = 0
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3
EXIT_NUMERICAL = 4
EXIT_INPUT = 5

_EXIT_CODES = {
    Status.OPTIMAL: EXIT_OPTIMAL,
    Status.PRIMAL_INFEASIBLE: EXIT_INFEASIBLE,
    Status.DUAL_INFEASIBLE: EXIT_INFEASIBLE,
    Status.ITERATION_LIMIT: EXIT_LIMIT,
    Status.TIME_LIMIT: EXIT_LIMIT,
    Status.NUMERICAL_ERROR: EXIT_NUMERICAL,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdlp", description="First-order LP solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve an MPS file")
    s.add_argument("input", help="MPS file (fixed or free format, optionally .gz)")
    s.add_argument("--eps-primal", type=float, default=1e-8)
    s.add_argument("--eps-dual", type=float, default=1e-8)
    s.add_argument("--rel-gap", type=float, default=1e-2)
    s.add_argument("--iters", type=int, default=1_000_000, help="iteration limit")
    s.add_argument("--time-limit", type=float, default=float("inf"), help="seconds")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--shards-per-thread", type=int, default=4)
    s.add_argument("--no-polish", action="store_true")
    s.add_argument("--no-scaling", action="store_true")
    s.add_argument("--out", help="write the JSON solution here (default: stdout)")
    s.add_argument("--arrays", action="store_true", help="include x, y, r in the JSON")
    s.add_argument("--quiet", action="store_true", help="suppress per-cadence log lines")

    g = sub.add_parser("generate", help="write a synthetic instance as MPS")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("-m", type=int, default=50)
    g.add_argument("-n", type=int, default=100)
    g.add_argument("--density", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="destination MPS path")

    c = sub.add_parser("check", help="verify a JSON solution against an MPS file")
    c.add_argument("input", help="MPS file")
    c.add_argument("solution", help="JSON written by 'solve --arrays'")
    c.add_argument("--eps-primal", type=float, default=1e-8)
    c.add_argument("--eps-dual", type=float, default=1e-8)
    c.add_argument("--rel-gap", type=float, default=1e-2)
    return parser


def _cmd_solve(args) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if args.quiet else logging.INFO)
    problem = read_mps(args.input)
    options = SolverOptions(
        eps_primal=args.eps_primal, eps_dual=args.eps_dual, eps_rel_gap=args.rel_gap,
        iteration_limit=args.iters, time_limit=args.time_limit, threads=args.threads,
        shards_per_thread=args.shards_per_thread, enable_polishing=not args.no_polish,
        enable_scaling=not args.no_scaling)
    result = solve(problem, options)
    write_solution(result, args.out if args.out else sys.stdout,
                   include_arrays=args.arrays, maximize=problem.maximize)
    return _EXIT_CODES[result.status]


def _cmd_generate(args) -> int:
    inst = generate_instance(args.kind, args.m, args.n, args.density, args.seed)
    write_mps(inst.problem, args.out)
    if inst.optimal_objective is not None:
        print(f"optimal_objective={inst.optimal_objective:.17g}")
    return 0


def _cmd_check(args) -> int:
    problem = read_mps(args.input)
    doc = read_solution(args.solution)
    if not all(k in doc for k in ("x", "y", "r")):
        print("solution has no arrays; rerun solve with --arrays", file=sys.stderr)
        return EXIT_INPUT
    x, y, r = (np.asarray(doc[k], dtype=np.float64) for k in ("x", "y", "r"))
    if x.shape != (problem.num_vars,) or y.shape != (problem.num_cons,) or r.shape != x.shape:
        print("array lengths do not match the problem", file=sys.stderr)
        return EXIT_INPUT
    summary = kkt_residuals(problem, x, y, r)
    tol = Tolerances(args.eps_primal, args.eps_dual, args.rel_gap)
    ok = check_termination(summary, tol) == "optimal"
    for key, value in summary.as_dict().items():
        print(f"{key}={value:.17g}")
    print(f"within_tolerances={'yes' if ok else 'no'}")
    if doc.get("status") == "optimal" and not ok:
        return EXIT_NUMERICAL
    return EXIT_OPTIMAL if ok else EXIT_LIMIT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "generate":
            return _cmd_generate(args)
        return _cmd_check(args)
    except (MpsError, InvalidProblemError, SolutionIOError, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
