"""Scaled-down studies shared by the acceptance tests and the scripts.

Each study returns plain records; checking them against oracles is left to
the caller.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .generate import GeneratedInstance, generate_instance
from .pdhg import PdhgOperator, Point
from .polishing import fixed_restart_feasibility
from .solver import SolveResult, SolverOptions, solve


def correctness_instance(seed: int, dominance: float = 0.3) -> GeneratedInstance:
    """Random-feasible instance with n ~ U[20, 500], m ~ U[n/4, n], density 0.1."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 501))
    m = int(rng.integers(max(1, n // 4), n + 1))
    return generate_instance("random-feasible", m, n, 0.1, seed, dominance)


def suite_instance(seed: int, dominance: float = 0.3) -> GeneratedInstance:
    """Smaller random-feasible instance for the polishing suite: n ~ U[50, 200]."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(50, 201))
    m = int(rng.integers(n // 4, n + 1))
    return generate_instance("random-feasible", m, n, 0.1, seed, dominance)


@dataclass
class SuiteRecord:
    seed: int
    plain: SolveResult
    polished: SolveResult

    @property
    def polishing_wins(self) -> bool:
        return (self.polished.status.value == "optimal"
                and self.polished.stats.iterations < self.plain.stats.iterations)


def polishing_suite(size: int = 50, min_iterations: int = 1000, dominance: float = 0.3,
                    first_seed: int = 1001, max_seed: int = 3000,
                    iteration_limit: int = 30_000) -> list[SuiteRecord]:
    """Scan seeds until ``size`` instances need at least ``min_iterations``
    unpolished iterations, then solve each again with polishing on."""
    out = []
    for seed in range(first_seed, max_seed):
        p = suite_instance(seed, dominance).problem
        plain = solve(p, SolverOptions(enable_polishing=False, iteration_limit=iteration_limit))
        if plain.stats.iterations < min_iterations:
            continue
        polished = solve(p, SolverOptions(enable_polishing=True, iteration_limit=iteration_limit))
        out.append(SuiteRecord(seed, plain, polished))
        if len(out) == size:
            break
    return out


@dataclass
class ContractionRecord:
    seed: int
    residuals: np.ndarray
    slope: float
    r_squared: float
    points_used: int


def residual_fit(residuals, floor_ratio: float = 1e-11) -> tuple[float, float, int]:
    """Least-squares line through log residual vs restart index.

    Points below ``floor_ratio`` times the first residual are dropped; they sit
    at rounding level and carry no rate information.
    """
    res = np.asarray(residuals, dtype=float)
    keep = res > floor_ratio * res[0]
    idx = np.arange(res.size)[keep]
    logs = np.log(res[keep])
    slope, icpt = np.polyfit(idx, logs, 1)
    pred = slope * idx + icpt
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 - float(((logs - pred) ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2, int(keep.sum())


def contraction_run(seed: int, sigma_max: float, restart_length: int = 500,
                    num_restarts: int = 30, m: int = 20, n: int = 40) -> ContractionRecord:
    """Fixed-restart feasibility iteration from the origin at step 1/(2 sigma_max)."""
    g = generate_instance("feasibility-system", m, n, 0.3, seed)
    tr = fixed_restart_feasibility(g.problem.matrix, g.rhs, np.zeros(n), 0.5 / sigma_max,
                                   restart_length, num_restarts)
    res = np.array(tr.residuals)
    slope, r2, used = residual_fit(res)
    return ContractionRecord(seed, res, slope, r2, used)


def fixed_step_distances(problem, x_star, y_star, eta: float, omega: float = 1.0,
                         iterations: int = 3000) -> tuple[np.ndarray, np.ndarray]:
    """Distances to ``(x_star, y_star)`` along plain PDHG with a constant step.

    Returns the omega-norm and the PDHG-norm distance after every step, the
    start point being the origin projected onto the bounds.
    """
    m, n = problem.num_cons, problem.num_vars
    op = PdhgOperator(problem)
    z = op.point(np.clip(np.zeros(n), problem.var_lower, problem.var_upper), np.zeros(m))
    out = Point.empty(m, n)
    A = problem.matrix
    w_norm, p_norm = [], []

    def record(p):
        dx, dy = p.x - x_star, p.y - y_star
        base = omega * (dx @ dx) + (dy @ dy) / omega
        w_norm.append(np.sqrt(base))
        p_norm.append(np.sqrt(max(base / eta + 2.0 * (dy @ (A @ dx)), 0.0)))

    record(z)
    for _ in range(iterations):
        op.step(z, omega, eta, out)
        z, out = out, z
        record(z)
    return np.array(w_norm), np.array(p_norm)


def spmv_timing(nnz: int = 10_000_000, threads: int = 4, repeats: int = 5,
                seed: int = 0) -> dict:
    """Best-of-``repeats`` wall time of the sharded ``A x`` at 1 and ``threads`` threads."""
    m = n = max(1, nnz // 10)  # ten nonzeros per row on average
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, m, nnz)
    cols = rng.integers(0, n, nnz)
    A = sp.csr_matrix((rng.standard_normal(nnz), (rows, cols)), shape=(m, n))
    del rows, cols
    x = rng.standard_normal(n)
    out = np.empty(m)
    times = {}
    for t in (1, threads):
        effective = linalg.set_threads(t)
        mat = linalg.ShardedMatrix(A, threads=t)
        mat.matvec(x, out)  # warm-up and compile
        best = np.inf
        for _ in range(repeats):
            start = time.perf_counter()
            mat.matvec(x, out)
            best = min(best, time.perf_counter() - start)
        times[t] = (best, effective)
        del mat
    linalg.set_threads(1)
    return {"nnz": int(A.nnz), "shape": (m, n), "seconds": times,
            "speedup": times[1][0] / times[threads][0]}
