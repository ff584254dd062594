"""The PDHG step on the LP saddle function and the adaptive step-size rule.

Iterates carry their two matrix products (``A x`` and ``A' y``) so every
accepted step costs exactly two sparse products: ``A x'`` for the new primal
point (the extrapolation ``A(2x' - x)`` is formed from it and the cached
``A x``) and ``A' y'`` for the new dual point, which the next step reuses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from pdlp import linalg
from pdlp.linalg import ShardedMatrix
from pdlp.problem import LpProblem

MAX_STEP_ATTEMPTS = 60
REDUCTION_EXPONENT = 0.3
GROWTH_EXPONENT = 0.6


class NumericalError(ArithmeticError):
    pass


class EmptyAverageError(RuntimeError):
    pass


@dataclass
class StepState:
    eta: float
    eta_hat: float
    omega: float
    total_iterations: int = 0
    outer_index: int = 0
    inner_index: int = 0

    @property
    def tau(self) -> float:
        return self.eta / self.omega

    @property
    def sigma(self) -> float:
        return self.eta * self.omega


@dataclass
class Point:
    """Primal-dual iterate with its cached products."""

    x: np.ndarray
    y: np.ndarray
    ax: np.ndarray
    aty: np.ndarray

    @classmethod
    def empty(cls, m: int, n: int) -> "Point":
        return cls(np.zeros(n), np.zeros(m), np.zeros(m), np.zeros(n))

    def copy(self) -> "Point":
        return Point(self.x.copy(), self.y.copy(), self.ax.copy(), self.aty.copy())

    def assign(self, other: "Point") -> None:
        np.copyto(self.x, other.x)
        np.copyto(self.y, other.y)
        np.copyto(self.ax, other.ax)
        np.copyto(self.aty, other.aty)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))


@dataclass
class AverageState:
    """Step-size-weighted running sum since the last restart."""

    x_sum: np.ndarray
    y_sum: np.ndarray
    weight_total: float = 0.0

    @classmethod
    def zeros(cls, m: int, n: int) -> "AverageState":
        return cls(np.zeros(n), np.zeros(m))

    @property
    def is_empty(self) -> bool:
        return self.weight_total <= 0.0

    def add(self, x, y, weight: float) -> None:
        if not weight > 0:
            raise ValueError("average weight must be positive")
        self.x_sum += weight * x
        self.y_sum += weight * y
        self.weight_total += weight

    def reset(self) -> None:
        self.x_sum[:] = 0.0
        self.y_sum[:] = 0.0
        self.weight_total = 0.0

    def average(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_empty:
            raise EmptyAverageError("average queried with no accumulated points")
        return self.x_sum / self.weight_total, self.y_sum / self.weight_total


def update_average(avg: AverageState, x, y, eta_used: float) -> AverageState:
    avg.add(x, y, eta_used)
    return avg


@numba.njit(parallel=True, cache=True)
def _primal_update(x, aty, c, lower, upper, tau, bounds, out):
    for s in numba.prange(bounds.size - 1):
        for j in range(bounds[s], bounds[s + 1]):
            t = x[j] - tau * (c[j] - aty[j])
            if t < lower[j]:
                t = lower[j]
            if t > upper[j]:
                t = upper[j]
            out[j] = t


@numba.njit(parallel=True, cache=True)
def _dual_update(y, ax_new, ax_old, sigma, con_lower, con_upper, bounds, out):
    # y' = yhat - sigma * proj_[-u, -l](yhat / sigma) written case by case so
    # that the sign of y' (membership in Y) is exact in floating point
    for s in numba.prange(bounds.size - 1):
        for i in range(bounds[s], bounds[s + 1]):
            yhat = y[i] - sigma * (2.0 * ax_new[i] - ax_old[i])
            lo = -sigma * con_upper[i]
            hi = -sigma * con_lower[i]
            if yhat < lo:
                out[i] = yhat - lo
            elif yhat > hi:
                out[i] = yhat - hi
            else:
                out[i] = 0.0


def step_size_limit(dx_sq: float, dy_sq: float, interaction: float, omega: float) -> float:
    """Largest step the descent inequality admits; ``inf`` for nonpositive curvature."""
    if interaction <= 0.0:
        return math.inf
    return (omega * dx_sq + dy_sq / omega) / (2.0 * interaction)


def next_step_size(eta_bar: float, eta: float, k: int) -> float:
    # k = 0 would zero the reduction factor; evaluate at max(k, 1)
    kk = max(k, 1) + 1
    return min((1.0 - kk ** -REDUCTION_EXPONENT) * eta_bar,
               (1.0 + kk ** -GROWTH_EXPONENT) * eta)


@dataclass
class StepRecord:
    eta: float
    eta_bar: float
    accepted: bool
    dz_sq_omega: float
    interaction: float


class PdhgOperator:
    """PDHG on one LP with preallocated workspace.

    ``trace`` collects a :class:`StepRecord` per trial step when
    ``record_steps`` is set; the solver exposes it for contract checks.
    """

    def __init__(self, problem: LpProblem, threads: int = 1,
                 shards_per_thread: int = linalg.SHARDS_PER_THREAD,
                 record_steps: bool = False):
        self.problem = problem
        self.A = ShardedMatrix(problem.matrix, problem.matrix_csc, threads, shards_per_thread)
        self.m, self.n = problem.num_cons, problem.num_vars
        self.c = np.ascontiguousarray(problem.objective)
        self.var_lower = np.ascontiguousarray(problem.var_lower)
        self.var_upper = np.ascontiguousarray(problem.var_upper)
        self.con_lower = np.ascontiguousarray(problem.con_lower)
        self.con_upper = np.ascontiguousarray(problem.con_upper)
        self._trial = Point.empty(self.m, self.n)
        self._dx = np.empty(self.n)
        self._dy = np.empty(self.m)
        self._dax = np.empty(self.m)
        self.record_steps = record_steps
        self.trace: list[StepRecord] = []
        self.step_attempts = 0

    # -- helpers ------------------------------------------------------------
    def point(self, x, y) -> Point:
        x = np.array(x, dtype=np.float64)
        y = np.array(y, dtype=np.float64)
        return Point(x, y, self.A.matvec(x), self.A.rmatvec(y))

    def refresh(self, p: Point) -> Point:
        self.A.matvec(p.x, out=p.ax)
        self.A.rmatvec(p.y, out=p.aty)
        return p

    def weighted_norm(self, x, y, omega: float) -> float:
        return linalg.weighted_norm(x, y, omega, self.A.col_plan, self.A.row_plan)

    # -- the step -----------------------------------------------------------
    def step(self, z: Point, omega: float, eta: float, out: Point) -> Point:
        """One PDHG step from ``z`` written into ``out`` (``z`` is untouched)."""
        tau, sigma = eta / omega, eta * omega
        _primal_update(z.x, z.aty, self.c, self.var_lower, self.var_upper, tau,
                       self.A.col_plan.boundaries, out.x)
        self.A.matvec(out.x, out=out.ax)
        _dual_update(z.y, out.ax, z.ax, sigma, self.con_lower, self.con_upper,
                     self.A.row_plan.boundaries, out.y)
        self.A.rmatvec(out.y, out=out.aty)
        return out

    def _movement(self, z: Point, new: Point) -> tuple[float, float, float]:
        np.subtract(new.x, z.x, out=self._dx)
        np.subtract(new.y, z.y, out=self._dy)
        np.subtract(new.ax, z.ax, out=self._dax)
        # the coupling term is -y'Ax, so curvature is -dy'A dx in this convention
        return (linalg.norm_sq(self._dx, self.A.col_plan),
                linalg.norm_sq(self._dy, self.A.row_plan),
                -linalg.dot(self._dy, self._dax, self.A.row_plan))

    def adaptive_step(self, z: Point, omega: float, eta_hat: float, k: int,
                      out: Point) -> tuple[float, float]:
        """Retry PDHG steps until the step size passes the descent test.

        On return ``out`` holds the accepted point; returns ``(eta_used, eta_next)``.
        """
        eta = eta_hat
        for _ in range(MAX_STEP_ATTEMPTS):
            if not (eta > 0 and math.isfinite(eta)):
                break
            self.step(z, omega, eta, out)
            self.step_attempts += 1
            dx_sq, dy_sq, inter = self._movement(z, out)
            if not (math.isfinite(dx_sq) and math.isfinite(dy_sq) and math.isfinite(inter)):
                raise NumericalError("non-finite values in PDHG step")
            eta_bar = step_size_limit(dx_sq, dy_sq, inter, omega)
            eta_next = next_step_size(eta_bar, eta, k)
            accepted = eta <= eta_bar
            if self.record_steps:
                self.trace.append(StepRecord(eta, eta_bar, accepted,
                                             omega * dx_sq + dy_sq / omega, inter))
            if accepted:
                return eta, eta_next
            eta = eta_next
        raise NumericalError(f"step size search failed after {MAX_STEP_ATTEMPTS} attempts")


def _as_point(op: PdhgOperator, x, y) -> Point:
    return op.point(x, y)


def pdhg_step(problem: LpProblem, x, y, omega: float, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """A single plain PDHG step with ``tau = eta/omega``, ``sigma = eta*omega``."""
    op = PdhgOperator(problem)
    out = Point.empty(op.m, op.n)
    op.step(_as_point(op, x, y), omega, eta, out)
    if not out.is_finite():
        raise NumericalError("non-finite values in PDHG step")
    return out.x, out.y


def adaptive_step(problem: LpProblem, x, y, omega: float, eta_hat: float, k: int):
    """Returns ``((x', y'), eta_used, eta_next)``."""
    op = PdhgOperator(problem)
    out = Point.empty(op.m, op.n)
    eta, eta_next = op.adaptive_step(_as_point(op, x, y), omega, eta_hat, k, out)
    return (out.x, out.y), eta, eta_next


def initial_step_size(problem: LpProblem) -> float:
    """``1 / max |A_ij|``, or 1 for an all-zero matrix."""
    data = problem.matrix.data
    biggest = float(np.max(np.abs(data))) if data.size else 0.0
    return 1.0 / biggest if biggest > 0 else 1.0
