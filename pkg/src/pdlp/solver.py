"""The solve driver: preconditioning, the restarted main loop, polishing and
status reporting."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from pdlp import linalg
from pdlp.convergence import (
    EPS_RAY,
    InfeasibilityCertificate,
    RayCandidate,
    ReducedCostMode,
    ResidualSummary,
    Tolerances,
    check_infeasibility,
    check_termination,
    kkt_residuals,
    recover_reduced_costs,
)
from pdlp.engine import PdhgRun
from pdlp.pdhg import NumericalError, PdhgOperator, Point, StepRecord, initial_step_size
from pdlp.polishing import PolishingSchedule, polish_attempt
from pdlp.problem import LpProblem, check
from pdlp.restart import EPS_ZERO, RestartThresholds, initialize_primal_weight
from pdlp.scaling import RescalingInfo, apply_rescaling

log = logging.getLogger("pdlp")

CHECK_FREQUENCY = 64


class Status(enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"
    ITERATION_LIMIT = "iteration-limit"
    TIME_LIMIT = "time-limit"
    NUMERICAL_ERROR = "numerical-error"


@dataclass
class SolverOptions:
    eps_primal: float = 1e-8
    eps_dual: float = 1e-8
    eps_rel_gap: float = 1e-2
    iteration_limit: int = 1_000_000
    time_limit: float = math.inf
    threads: int = 1
    shards_per_thread: int = linalg.SHARDS_PER_THREAD
    enable_polishing: bool = True
    enable_scaling: bool = True
    # None picks natural with polishing and bound-robust without
    reduced_cost_mode: ReducedCostMode | None = None
    thresholds: RestartThresholds = field(default_factory=RestartThresholds)
    theta: float = 0.5
    eps_zero: float = EPS_ZERO
    eps_ray: float = EPS_RAY
    check_frequency: int = CHECK_FREQUENCY
    ruiz_iterations: int = 10
    pock_chambolle_alpha: float | None = 1.0
    record_steps: bool = False

    def __post_init__(self):
        for name in ("eps_primal", "eps_dual", "eps_rel_gap"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.iteration_limit < 0 or not self.time_limit > 0:
            raise ValueError("limits must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.threads < 1 or self.shards_per_thread < 1 or self.check_frequency < 1:
            raise ValueError("threads, shards_per_thread and check_frequency must be positive")

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(self.eps_primal, self.eps_dual, self.eps_rel_gap)

    def resolved_reduced_cost_mode(self) -> ReducedCostMode:
        if self.reduced_cost_mode is not None:
            return ReducedCostMode(self.reduced_cost_mode)
        return ReducedCostMode.NATURAL if self.enable_polishing else ReducedCostMode.BOUND_ROBUST


@dataclass
class SolveStats:
    iterations: int = 0
    main_iterations: int = 0
    polish_iterations: int = 0
    restarts: int = 0
    step_attempts: int = 0
    step_retries: int = 0
    polish_attempts: int = 0
    wall_time: float = 0.0
    phase_times: dict = field(default_factory=dict)
    final_omega: float = math.nan
    final_eta: float = math.nan


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    residuals: ResidualSummary | None
    stats: SolveStats
    certificate: InfeasibilityCertificate | None = None
    source: str = ""  # which point was returned: current, average, polished, initial
    step_trace: list[StepRecord] | None = None
    scaled_problem: LpProblem | None = None
    scaling: RescalingInfo | None = None

    @property
    def objective(self) -> float:
        return self.residuals.primal_objective if self.residuals else math.nan


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()
        self.phases: dict[str, float] = {}

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def add(self, phase: str, seconds: float) -> None:
        self.phases[phase] = self.phases.get(phase, 0.0) + seconds


def _log_cadence(phase: str, run: PdhgRun, summary: ResidualSummary | None, mu: float,
                 reason: str) -> None:
    if not log.isEnabledFor(logging.INFO):
        return
    fields = [f"phase={phase}", f"k={run.k}", f"n={run.n}", f"mu={mu:.6e}",
              f"omega={run.omega:.6e}", f"eta={run.eta:.6e}", f"restart={reason}"]
    if summary is not None:
        fields += [f"primal_res={summary.primal_inf_norm:.6e}",
                   f"dual_res={summary.dual_inf_norm:.6e}",
                   f"rel_gap={summary.rel_gap:.6e}"]
    log.info(" ".join(fields))


class _Evaluator:
    """Maps scaled points to original-space residuals and certificates."""

    def __init__(self, original: LpProblem, info: RescalingInfo, mode: ReducedCostMode):
        self.original = original
        self.info = info
        self.mode = mode

    def unscale(self, p: Point):
        D1, D2 = self.info.row_scale, self.info.col_scale
        # A x = (A~ x~) / D1 and A'y = (A~' y~) / D2
        return p.x * D2, p.y * D1, p.ax / D1, p.aty / D2

    def residuals(self, p: Point):
        x, y, ax, aty = self.unscale(p)
        r = recover_reduced_costs(self.original, x, y, self.mode, aty=aty)
        return kkt_residuals(self.original, x, y, r, ax=ax, aty=aty), (x, y, r)

    def final(self, x, y):
        """Residuals recomputed from scratch in original units."""
        r = recover_reduced_costs(self.original, x, y, self.mode)
        return kkt_residuals(self.original, x, y, r), r

    def ray_candidates(self, run: PdhgRun, avg: Point) -> list[RayCandidate]:
        D1, D2 = self.info.row_scale, self.info.col_scale
        dx, dy = run.difference()
        cands = [RayCandidate("iterate-difference", dx * D2, dy * D1)]
        for name, p in (("normalized-iterate", run.z), ("normalized-average", avg)):
            norm = run.op.weighted_norm(p.x, p.y, run.omega)
            if norm > 0:
                cands.append(RayCandidate(name, p.x * D2 / norm, p.y * D1 / norm))
        return cands


def solve(problem: LpProblem, options: SolverOptions | None = None,
          x0=None, y0=None) -> SolveResult:
    """Solve ``problem`` with restarted adaptive PDHG.

    ``x0``/``y0`` optionally warm-start the run (original units); by default
    the start is the projection of 0 onto the variable box and ``y = 0``.
    """
    options = SolverOptions() if options is None else options
    clock = _Clock()
    check(problem)
    linalg.set_threads(options.threads)

    t0 = time.perf_counter()
    if options.enable_scaling:
        scaled, info = apply_rescaling(problem, options.ruiz_iterations,
                                       options.pock_chambolle_alpha)
    else:
        scaled, info = problem, RescalingInfo.identity(problem.num_cons, problem.num_vars)
    clock.add("rescaling", time.perf_counter() - t0)

    mode = options.resolved_reduced_cost_mode()
    ev = _Evaluator(problem, info, mode)
    tol = options.tolerances
    stats = SolveStats()
    op = PdhgOperator(scaled, options.threads, options.shards_per_thread, options.record_steps)

    if x0 is None:
        x_start = np.clip(np.zeros(scaled.num_vars), scaled.var_lower, scaled.var_upper)
    else:
        x_start = np.clip(np.asarray(x0, dtype=np.float64) / info.col_scale,
                          scaled.var_lower, scaled.var_upper)
    y_start = np.zeros(scaled.num_cons) if y0 is None else np.asarray(y0, float) / info.row_scale
    omega0 = initialize_primal_weight(scaled, options.eps_zero)
    run = PdhgRun(op, x_start, y_start, omega0, initial_step_size(scaled),
                  options.thresholds, options.theta, options.eps_zero)
    schedule = PolishingSchedule()

    def finish(status: Status, x, y, r=None, summary=None, source="", cert=None) -> SolveResult:
        if r is None or summary is None:
            summary, r = ev.final(x, y)
        stats.main_iterations = run.k
        stats.iterations = stats.main_iterations + stats.polish_iterations
        stats.restarts = run.n
        stats.step_attempts = op.step_attempts
        stats.step_retries = op.step_attempts - run.k
        stats.wall_time = clock.elapsed()
        stats.phase_times = dict(clock.phases)
        stats.final_omega = run.omega
        stats.final_eta = run.eta
        log.info(f"phase=done status={status.value} k={stats.iterations} "
                 f"restarts={stats.restarts} wall={stats.wall_time:.3f}")
        return SolveResult(status, x, y, r, summary, stats, cert, source,
                           op.trace if options.record_steps else None, scaled, info)

    def try_optimal(p: Point, source: str) -> SolveResult | None:
        summary, _ = ev.residuals(p)
        if check_termination(summary, tol) is None:
            return None
        x, y, _, _ = ev.unscale(p)
        final, r = ev.final(x, y)
        if check_termination(final, tol) is None:
            return None
        return finish(Status.OPTIMAL, x, y, r, final, source)

    # termination before the first step
    done = try_optimal(run.z, "initial")
    if done is not None:
        return done

    t_loop = time.perf_counter()
    freq = options.check_frequency
    while True:
        if run.k >= options.iteration_limit:
            clock.add("main", time.perf_counter() - t_loop)
            x, y, _, _ = ev.unscale(run.z)
            return finish(Status.ITERATION_LIMIT, x, y, source="current")
        try:
            run.step()
        except NumericalError:
            clock.add("main", time.perf_counter() - t_loop)
            # one recovery attempt: the last finite point may already be good enough
            done = try_optimal(run.z, "current")
            if done is not None:
                return done
            x, y, _, _ = ev.unscale(run.z)
            return finish(Status.NUMERICAL_ERROR, x, y, source="current")

        if options.enable_polishing and schedule.due(run.k):
            avg = run.average_point()
            summary, _ = ev.residuals(avg)
            if summary.rel_gap <= tol.eps_rel_gap:
                clock.add("main", time.perf_counter() - t_loop)
                t_pol = time.perf_counter()
                stats.polish_attempts += 1
                outcome = polish_attempt(
                    scaled, problem, info, avg.x, avg.y, run.omega, run.eta_hat, run.k, tol,
                    schedule.budget_divisor, options.threads, options.shards_per_thread,
                    options.thresholds, options.theta)
                stats.polish_iterations += outcome.iterations
                clock.add("polish", time.perf_counter() - t_pol)
                log.info(f"phase=polish k={run.k} outcome={outcome.stage} "
                         f"primal_iters={outcome.primal_iterations} "
                         f"dual_iters={outcome.dual_iterations}")
                t_loop = time.perf_counter()
                if outcome.solved:
                    clock.add("main", 0.0)
                    return finish(Status.OPTIMAL, outcome.x, outcome.y, outcome.r,
                                  outcome.summary, "polished")
            schedule.advance()

        if run.k % freq:
            continue

        avg = run.average_point()
        for p, source in ((run.z, "current"), (avg, "average")):
            done = try_optimal(p, source)
            if done is not None:
                clock.add("main", time.perf_counter() - t_loop)
                return done

        cert = check_infeasibility(problem, ev.ray_candidates(run, avg), options.eps_ray)
        if cert is not None:
            clock.add("main", time.perf_counter() - t_loop)
            status = (Status.PRIMAL_INFEASIBLE if cert.kind.value == "primal-infeasible"
                      else Status.DUAL_INFEASIBLE)
            x, y, _, _ = ev.unscale(run.z)
            return finish(status, x, y, source="current", cert=cert)

        if clock.elapsed() >= options.time_limit:
            clock.add("main", time.perf_counter() - t_loop)
            x, y, _, _ = ev.unscale(run.z)
            return finish(Status.TIME_LIMIT, x, y, source="current")

        restart = run.maybe_restart(avg)
        if log.isEnabledFor(logging.INFO):
            summary, _ = ev.residuals(run.z)
            _log_cadence("main", run, summary, restart.candidate_mu, restart.reason.value)
