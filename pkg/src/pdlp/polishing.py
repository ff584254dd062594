"""Feasibility polishing and the fixed-frequency restarted feasibility method.

Polishing pauses the main run, solves the zero-objective primal problem
warm-started at the average primal iterate, then the zero-objective dual
problem warm-started at the average dual iterate, and stitches the two
results together. Both feasibility runs are ordinary restarted adaptive
PDHG runs with their own iteration counters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from pdlp.convergence import (
    ResidualSummary,
    Tolerances,
    check_termination,
    interval_distance,
    kkt_residuals,
    recover_reduced_costs,
)
from pdlp.engine import PdhgRun
from pdlp.pdhg import NumericalError, PdhgOperator, Point
from pdlp.problem import LpProblem, build_dual_feasibility, build_primal_feasibility
from pdlp.restart import RestartThresholds
from pdlp.scaling import RescalingInfo

FIRST_TRIGGER = 100
BUDGET_DIVISOR = 8
CHECK_FREQUENCY = 64


@dataclass
class PolishingSchedule:
    next_trigger: int = FIRST_TRIGGER
    budget_divisor: int = BUDGET_DIVISOR

    def due(self, k: int) -> bool:
        return k == self.next_trigger

    def budget(self, k: int) -> int:
        return k // self.budget_divisor

    def advance(self) -> None:
        self.next_trigger *= 2


@dataclass
class FeasibilityRunResult:
    point: Point | None
    iterations: int
    restarts: int


def run_feasibility(problem: LpProblem, x0, y0, omega: float, eta_hat: float,
                    budget: int, eps: float, row_weights: np.ndarray,
                    threads: int = 1, shards_per_thread: int = 4,
                    thresholds: RestartThresholds = RestartThresholds(),
                    theta: float = 0.5,
                    check_frequency: int = CHECK_FREQUENCY) -> FeasibilityRunResult:
    """Restarted PDHG on a zero-objective problem until ``A x`` is within ``eps``.

    The violation is measured as ``max_i row_weights_i * dist((A x)_i, [l_i, u_i])``;
    the caller picks weights that convert to original units. Checks happen
    every ``check_frequency`` iterations and once more when the budget runs out.
    """
    op = PdhgOperator(problem, threads, shards_per_thread)
    run = PdhgRun(op, x0, y0, omega, eta_hat, thresholds, theta)

    def violation(p: Point) -> float:
        d = interval_distance(p.ax, problem.con_lower, problem.con_upper) * row_weights
        return float(d.max(initial=0.0))

    if violation(run.z) <= eps:
        return FeasibilityRunResult(run.z, 0, 0)
    while run.k < budget:
        run.step()
        cadence = run.k % check_frequency == 0
        if cadence or run.k == budget:
            avg = run.average_point()
            for p in (run.z, avg):
                if violation(p) <= eps:
                    return FeasibilityRunResult(p.copy(), run.k, run.n)
            if cadence:
                run.maybe_restart(avg)
    return FeasibilityRunResult(None, run.k, run.n)


@dataclass
class PolishOutcome:
    solved: bool
    x: np.ndarray | None = None  # original space
    y: np.ndarray | None = None
    r: np.ndarray | None = None
    summary: ResidualSummary | None = None
    primal_iterations: int = 0
    dual_iterations: int = 0
    stage: str = ""

    @property
    def iterations(self) -> int:
        return self.primal_iterations + self.dual_iterations


def polish_attempt(scaled: LpProblem, original: LpProblem, info: RescalingInfo,
                   x_avg, y_avg, omega: float, eta_hat: float, k: int,
                   tol: Tolerances, budget_divisor: int = BUDGET_DIVISOR,
                   threads: int = 1, shards_per_thread: int = 4,
                   thresholds: RestartThresholds = RestartThresholds(),
                   theta: float = 0.5) -> PolishOutcome:
    """One polishing attempt from the paused main run's average iterate.

    Never touches the main run; the caller resumes it unchanged whenever the
    outcome is not ``solved``.
    """
    budget = k // budget_divisor
    kw = dict(threads=threads, shards_per_thread=shards_per_thread,
              thresholds=thresholds, theta=theta)
    out = PolishOutcome(False)
    try:
        primal = build_primal_feasibility(scaled)
        res = run_feasibility(primal.problem, x_avg, np.zeros(scaled.num_cons), omega, eta_hat,
                              budget, tol.eps_primal, 1.0 / info.row_scale, **kw)
        out.primal_iterations = res.iterations
        if res.point is None:
            out.stage = "primal-budget"
            return out
        x_tilde = res.point.x

        # the dual problem's primal variable is y, so the weight flips
        dual = build_dual_feasibility(scaled)
        res = run_feasibility(dual.problem, y_avg, np.zeros(scaled.num_vars), 1.0 / omega,
                              eta_hat, budget, tol.eps_dual, 1.0 / info.col_scale, **kw)
        out.dual_iterations = res.iterations
        if res.point is None:
            out.stage = "dual-budget"
            return out
        y_tilde = res.point.x
    except NumericalError:
        out.stage = "numerical-error"
        return out

    x = x_tilde * info.col_scale
    y = y_tilde * info.row_scale
    r = recover_reduced_costs(original, x, y, "natural")
    summary = kkt_residuals(original, x, y, r)
    out.x, out.y, out.r, out.summary = x, y, r, summary
    out.solved = check_termination(summary, tol) == "optimal"
    out.stage = "solved" if out.solved else "not-optimal"
    return out


# --- fixed-frequency restarts on {Ax = b, x >= 0} -------------------------------

def restart_factor(eta: float, a_norm: float) -> float:
    """``q = 4 (1 + eta |A|) / (1 - eta |A|)``."""
    s = eta * a_norm
    if not 0 < s < 1:
        raise ValueError("need 0 < eta * |A|_2 < 1")
    return 4.0 * (1.0 + s) / (1.0 - s)


def restart_length_bound(eta: float, a_norm: float, hoffman: float) -> int:
    """Restart period ``ceil(2 (q + 2) / (eta H(A)))`` that guarantees halving."""
    q = restart_factor(eta, a_norm)
    return math.ceil(2.0 * (q + 2.0) / (eta * hoffman))


@dataclass
class FixedRestartTrace:
    restart_points: list[np.ndarray] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)  # |A x - b|_2 at each restart point


def fixed_restart_feasibility(A, b, x0, eta: float, restart_length: int,
                              num_restarts: int) -> FixedRestartTrace:
    """Plain PDHG (equal primal/dual steps, zero objective) restarted every
    ``restart_length`` steps at the average primal iterate with the duals zeroed.

    ``restart_points[0]`` is ``x0``; entry ``n`` is the point after ``n`` restarts.
    """
    if restart_length < 1:
        raise ValueError("restart_length must be at least 1")
    A = sp.csr_matrix(A, dtype=np.float64)
    AT = A.T.tocsr()
    b = np.asarray(b, dtype=np.float64)
    x = np.maximum(np.asarray(x0, dtype=np.float64), 0.0)
    trace = FixedRestartTrace([x.copy()], [float(np.linalg.norm(A @ x - b))])
    for _ in range(num_restarts):
        y = np.zeros(A.shape[0])
        x_sum = np.zeros_like(x)
        for _ in range(restart_length):
            x_new = np.maximum(x + eta * (AT @ y), 0.0)
            y = y + eta * (b - A @ (2.0 * x_new - x))
            x = x_new
            x_sum += x
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericalError("non-finite iterate in fixed-restart PDHG")
        x = x_sum / restart_length
        trace.restart_points.append(x.copy())
        trace.residuals.append(float(np.linalg.norm(A @ x - b)))
    return trace
