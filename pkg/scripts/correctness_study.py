"""Solve generated random-feasible instances and compare with their known optimum."""

import argparse
import time

import numpy as np

from pdlp.experiments import correctness_instance
from pdlp.solver import SolverOptions, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--first", type=int, default=1)
    ap.add_argument("--last", type=int, default=200)
    ap.add_argument("--rel-gap", type=float, default=1e-8)
    ap.add_argument("--dominance", type=float, default=0.3)
    ap.add_argument("--iters", type=int, default=50_000)
    args = ap.parse_args()
    opts = SolverOptions(eps_rel_gap=args.rel_gap, iteration_limit=args.iters)
    its, failures, start = [], 0, time.perf_counter()
    for seed in range(args.first, args.last + 1):
        inst = correctness_instance(seed, args.dominance)
        t = time.perf_counter()
        res = solve(inst.problem, opts)
        f = inst.optimal_objective
        err = abs(res.objective - f) / max(1.0, abs(f))
        ok = res.status.value == "optimal" and err <= 1e-6
        failures += not ok
        its.append(res.stats.iterations)
        p = inst.problem
        print(f"seed={seed} m={p.num_cons} n={p.num_vars} status={res.status.value} "
              f"iterations={res.stats.iterations} obj_err={err:.1e} "
              f"seconds={time.perf_counter() - t:.2f}{'' if ok else ' MISS'}")
    its = np.array(its)
    print(f"instances={its.size} misses={failures} median_iterations={np.median(its):.0f} "
          f"max_iterations={its.max()} wall={time.perf_counter() - start:.0f}s")


if __name__ == "__main__":
    main()
