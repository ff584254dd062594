"""Synthetic LP instances with known answers.

``random-feasible`` instances are built backwards from a primal-dual pair
``(x*, y*, r*)`` that satisfies strict complementary slackness, so the
optimal value ``c'x*`` is certified at construction time without calling a
solver. The active set is a nonsingular basis, so the optimum is unique.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from pdlp.problem import LpProblem

KINDS = ("random-feasible", "random-infeasible", "transport", "feasibility-system")


@dataclass
class GeneratedInstance:
    problem: LpProblem
    kind: str
    seed: int
    optimal_objective: float | None = None
    x_star: np.ndarray | None = None
    y_star: np.ndarray | None = None
    r_star: np.ndarray | None = None
    rhs: np.ndarray | None = None  # feasibility-system: b in A x = b
    feasible_point: np.ndarray | None = None


def random_sparse(m: int, n: int, density: float, rng: np.random.Generator) -> sp.csr_matrix:
    """Gaussian sparse matrix with at least one nonzero in every row and column."""
    A = sp.random(m, n, density=density, format="lil", random_state=rng,
                  data_rvs=rng.standard_normal)
    A = sp.lil_matrix(A)
    for i in range(m):
        if A.rows[i] == []:
            A[i, rng.integers(n)] = rng.standard_normal()
    A = A.tocsc()
    empty = np.flatnonzero(np.diff(A.indptr) == 0)
    A = A.tolil()
    for j in empty:
        A[rng.integers(m), j] = rng.standard_normal()
    return A.tocsr()


def _signed(rng, size=None):
    """Magnitudes in [0.1, 2] with random signs, kept away from zero."""
    return rng.choice([-1.0, 1.0], size=size) * rng.uniform(0.1, 2.0, size=size)


def _random_feasible(m, n, density, rng, seed, dominance=0.3) -> GeneratedInstance:
    A = random_sparse(m, n, density, rng).tolil()

    # a active rows pin down a basic variables; every other variable sits at
    # a bound. With a nonsingular basis block and strict complementarity the
    # optimum is unique and nondegenerate.
    k = min(m, n)
    a = int(rng.integers((k + 1) // 2, k + 1))
    active = rng.permutation(m)[:a]
    basic = rng.permutation(n)[:a]
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basic] = True
    boost = rng.choice([-1.0, 1.0], size=a) * rng.uniform(1.0, 2.0, size=a)
    for i, j, v in zip(active, basic, boost):
        row_mass = float(np.abs(A.getrowview(i).toarray()).sum())
        A[i, j] = A[i, j] + v * max(1.0, dominance * row_mass)
    A = A.tocsr()
    if a:
        block = A[active][:, basic].toarray()
        if np.linalg.cond(block) > 1e8:  # practically never after the boost
            return _random_feasible(m, n, density, rng, seed, dominance)

    # variable bound types: 0 = [0, inf), 1 = [l, u], 2 = free (basic only)
    vtype = np.where(is_basic, rng.choice(3, size=n, p=[0.5, 0.3, 0.2]),
                     rng.choice(2, size=n, p=[0.6, 0.4]))
    var_lower = np.where(vtype == 0, 0.0, np.where(vtype == 1, -rng.uniform(0, 5, n), -np.inf))
    var_upper = np.where(vtype == 1, rng.uniform(1, 5, n), np.inf)
    x = np.empty(n)
    r = np.zeros(n)
    for j in range(n):
        if is_basic[j]:
            lo = var_lower[j] if np.isfinite(var_lower[j]) else -3.0
            hi = var_upper[j] if np.isfinite(var_upper[j]) else lo + 6.0
            x[j] = lo + (hi - lo) * rng.uniform(0.1, 0.9)
        elif vtype[j] == 0 or rng.random() < 0.5:
            x[j] = var_lower[j]
            r[j] = rng.uniform(0.1, 2.0)
        else:
            x[j] = var_upper[j]
            r[j] = -rng.uniform(0.1, 2.0)

    ax = A @ x
    is_active = np.zeros(m, dtype=bool)
    is_active[active] = True
    con_lower = np.full(m, -np.inf)
    con_upper = np.full(m, np.inf)
    y = np.zeros(m)
    for i in range(m):
        slack = rng.uniform(0.5, 2.0)
        width = rng.uniform(0.5, 2.0)
        if is_active[i]:
            # L, G, E, or ranged with the active side matching the sign of y
            kind = rng.choice(4, p=[0.35, 0.35, 0.2, 0.1])
            if kind == 2:
                con_lower[i] = con_upper[i] = ax[i]
                y[i] = _signed(rng)
            elif kind == 0 or (kind == 3 and rng.random() < 0.5):
                con_upper[i] = ax[i]
                con_lower[i] = ax[i] - width if kind == 3 else -np.inf
                y[i] = -rng.uniform(0.1, 2.0)
            else:
                con_lower[i] = ax[i]
                con_upper[i] = ax[i] + width if kind == 3 else np.inf
                y[i] = rng.uniform(0.1, 2.0)
        else:
            kind = rng.choice(3, p=[0.4, 0.4, 0.2])
            if kind in (0, 2):
                con_upper[i] = ax[i] + slack
            if kind in (1, 2):
                con_lower[i] = ax[i] - width
    c = A.T @ y + r
    problem = LpProblem(A, c, con_lower, con_upper, var_lower, var_upper,
                        name=f"random-feasible-{m}x{n}-s{seed}")
    return GeneratedInstance(problem, "random-feasible", seed, float(c @ x), x, y, r)


def _random_infeasible(m, n, density, rng, seed, dominance=0.3) -> GeneratedInstance:
    base = _random_feasible(m, n, density, rng, seed, dominance).problem
    A = base.matrix.tolil()
    # append a copy of a row with a bound interval disjoint from its original one
    rows = [i for i in range(m) if np.isfinite(base.con_upper[i]) or np.isfinite(base.con_lower[i])]
    i = rows[rng.integers(len(rows))]
    extra = A[i].toarray().ravel()
    A2 = sp.vstack([base.matrix, sp.csr_matrix(extra)]).tocsr()
    gap = rng.uniform(1.0, 3.0)
    if np.isfinite(base.con_upper[i]):
        lo, hi = base.con_upper[i] + gap, np.inf
    else:
        lo, hi = -np.inf, base.con_lower[i] - gap
    problem = LpProblem(
        A2, base.objective,
        np.append(base.con_lower, lo), np.append(base.con_upper, hi),
        base.var_lower, base.var_upper, name=f"random-infeasible-{m}x{n}-s{seed}")
    return GeneratedInstance(problem, "random-infeasible", seed)


def _transport(m, n, density, rng, seed, dominance=None) -> GeneratedInstance:
    """``m`` sources, ``n`` sinks; balanced supply and demand, dense arcs."""
    supply = rng.uniform(1, 10, m)
    demand = rng.dirichlet(np.ones(n)) * supply.sum()
    cost = rng.uniform(1, 10, (m, n))
    rows, cols = [], []
    for i in range(m):
        for j in range(n):
            rows += [i, m + j]
            cols += [i * n + j, i * n + j]
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m + n, m * n))
    con_lower = np.concatenate([np.full(m, -np.inf), demand])
    con_upper = np.concatenate([supply, np.full(n, np.inf)])
    problem = LpProblem(A, cost.ravel(), con_lower, con_upper,
                        np.zeros(m * n), np.full(m * n, np.inf),
                        name=f"transport-{m}x{n}-s{seed}")
    from scipy.optimize import linprog

    ref = linprog(cost.ravel(), A_ub=sp.vstack([A[:m], -A[m:]]),
                  b_ub=np.concatenate([supply, -demand]), bounds=(0, None), method="highs")
    return GeneratedInstance(problem, "transport", seed,
                             float(ref.fun) if ref.status == 0 else None)


def _feasibility_system(m, n, density, rng, seed, dominance=None) -> GeneratedInstance:
    A = random_sparse(m, n, density, rng)
    x_feas = np.maximum(rng.standard_normal(n), 0.0)
    b = A @ x_feas
    problem = LpProblem(A, np.zeros(n), b, b, np.zeros(n), np.full(n, np.inf),
                        name=f"feasibility-{m}x{n}-s{seed}")
    return GeneratedInstance(problem, "feasibility-system", seed, 0.0, rhs=b, feasible_point=x_feas)


def generate_instance(kind: str, m: int, n: int, density: float = 0.1,
                      seed: int = 0, dominance: float = 0.3) -> GeneratedInstance:
    """Build one instance; identical arguments give identical problems.

    ``dominance`` controls how strongly each basis entry of a random-feasible
    (or random-infeasible) instance outweighs the rest of its row. Large values
    give well-conditioned problems that PDHG solves in a few hundred
    iterations; values near 0 give hard instances with long tails.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if dominance < 0:
        raise ValueError("dominance must be nonnegative")
    rng = np.random.default_rng(seed)
    builders = {
        "random-feasible": _random_feasible,
        "random-infeasible": _random_infeasible,
        "transport": _transport,
        "feasibility-system": _feasibility_system,
    }
    if kind not in builders:
        raise ValueError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    return builders[kind](m, n, density, rng, seed, dominance)
