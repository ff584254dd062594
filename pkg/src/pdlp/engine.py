"""Restarted adaptive PDHG on one (already scaled) LP.

:class:`PdhgRun` owns the iterate, running average, step size, primal weight
and restart ledger of a single run. The main solve and each feasibility
polishing solve create their own run; the driver decides what to check at
each evaluation point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pdlp.pdhg import AverageState, PdhgOperator, Point
from pdlp.restart import (
    RestartLedger,
    RestartReason,
    RestartThresholds,
    normalized_duality_gap,
    should_restart,
    update_primal_weight,
)


@dataclass
class RestartEvaluation:
    mu_current: float
    mu_average: float
    candidate: str
    candidate_mu: float
    reason: RestartReason


class PdhgRun:
    def __init__(self, op: PdhgOperator, x0, y0, omega: float, eta_hat: float,
                 thresholds: RestartThresholds = RestartThresholds(),
                 theta: float = 0.5, eps_zero: float = 1e-12):
        self.op = op
        self.z = op.point(x0, y0)
        self.prev = self.z.copy()
        self._spare = self.z.copy()
        self.avg = AverageState.zeros(op.m, op.n)
        self.omega = float(omega)
        self.eta_hat = float(eta_hat)
        self.eta = float(eta_hat)
        self.thresholds = thresholds
        self.theta = theta
        self.eps_zero = eps_zero
        self.k = 0  # total iterations
        self.t = 0  # inner iterations since the last restart
        self.n = 0  # restarts so far
        self.ledger = RestartLedger(self.z.x.copy(), self.z.y.copy())
        self.last_reason = RestartReason.NO

    # -- stepping -------------------------------------------------------------
    def step(self) -> None:
        eta_used, eta_next = self.op.adaptive_step(
            self.z, self.omega, self.eta_hat, self.k, self._spare)
        # rotate buffers: the accepted trial becomes current, old current is kept
        self.prev, self.z, self._spare = self.z, self._spare, self.prev
        self.eta, self.eta_hat = eta_used, eta_next
        self.avg.add(self.z.x, self.z.y, eta_used)
        self.t += 1
        self.k += 1

    def average_point(self) -> Point:
        """Running average since the last restart (the current point if empty)."""
        if self.avg.is_empty:
            return self.z.copy()
        x, y = self.avg.average()
        return self.op.point(x, y)

    def difference(self) -> tuple[np.ndarray, np.ndarray]:
        return self.z.x - self.prev.x, self.z.y - self.prev.y

    # -- restarts -------------------------------------------------------------
    def _mu(self, p: Point, ref_x, ref_y, omega: float) -> float:
        radius = self.op.weighted_norm(p.x - ref_x, p.y - ref_y, omega)
        return normalized_duality_gap(self.op.problem, p.x, p.y, radius, omega, p.ax, p.aty)

    def evaluate_restart(self, avg: Point | None = None) -> RestartEvaluation:
        avg = self.average_point() if avg is None else avg
        L = self.ledger
        mu_cur = self._mu(self.z, L.last_restart_x, L.last_restart_y, self.omega)
        mu_avg = self._mu(avg, L.last_restart_x, L.last_restart_y, self.omega)
        candidate = "current" if mu_cur < mu_avg else "average"
        cmu = mu_cur if candidate == "current" else mu_avg
        reason = should_restart(cmu, L, self.t, self.k, self.thresholds)
        return RestartEvaluation(mu_cur, mu_avg, candidate, cmu, reason)

    def maybe_restart(self, avg: Point | None = None) -> RestartEvaluation:
        avg = self.average_point() if avg is None else avg
        ev = self.evaluate_restart(avg)
        self.last_reason = ev.reason
        if ev.reason:
            self.restart_to(avg if ev.candidate == "average" else self.z)
        else:
            self.ledger.previous_candidate_mu = ev.candidate_mu
        return ev

    def restart_to(self, p: Point) -> None:
        L = self.ledger
        new = p.copy()
        dx = float(np.linalg.norm(new.x - L.last_restart_x))
        dy = float(np.linalg.norm(new.y - L.last_restart_y))
        self.omega = update_primal_weight(dx, dy, self.omega, self.theta, self.eps_zero)
        mu_ref = self._mu(new, L.last_restart_x, L.last_restart_y, self.omega)
        self.z = new
        self.prev = new.copy()
        self.ledger = RestartLedger(new.x.copy(), new.y.copy(), mu_ref, math.inf)
        self.avg.reset()
        self.t = 0
        self.n += 1
