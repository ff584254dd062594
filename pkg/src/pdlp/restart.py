"""Normalized duality gap, restart decisions and primal-weight updates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from pdlp.problem import LpProblem, dual_box

EPS_ZERO = 1e-12
PRIMAL_WEIGHT_SMOOTHING = 0.5


@dataclass(frozen=True)
class RestartThresholds:
    beta_sufficient: float = 0.1
    beta_necessary: float = 0.9
    beta_artificial: float = 0.5

    def __post_init__(self):
        for name in ("beta_sufficient", "beta_necessary", "beta_artificial"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not self.beta_sufficient < self.beta_necessary:
            raise ValueError("beta_sufficient must be smaller than beta_necessary")


class RestartReason(enum.Enum):
    NO = "no"
    SUFFICIENT_DECAY = "sufficient-decay"
    NECESSARY_PLUS_STALL = "necessary-plus-stall"
    ARTIFICIAL = "artificial"

    def __bool__(self) -> bool:
        return self is not RestartReason.NO


@dataclass
class RestartLedger:
    """What the restart tests compare against during one outer loop.

    ``mu_at_last_restart`` starts at ``inf`` so that only the long-inner-loop
    rule can trigger the first restart.
    """

    last_restart_x: np.ndarray
    last_restart_y: np.ndarray
    mu_at_last_restart: float = math.inf
    previous_candidate_mu: float = math.inf


# --- normalized duality gap --------------------------------------------------

def _linear_segments(z, s, w, lo, hi):
    """Trajectories ``delta(mu)`` for linear pieces clamped to ``[lo, hi]``.

    Returns the initial slope ``b0`` and one event per component (``inf``
    when the component never reaches a bound) after which the offset is
    frozen at ``a1``.
    """
    b0 = s / w
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.where(s > 0, hi, np.where(s < 0, lo, np.inf))
        gap = target - z
        mu_hit = np.where(np.isfinite(target) & (s != 0), gap * w / s, np.inf)
    mu_hit = np.maximum(mu_hit, 0.0)
    a1 = np.where(np.isfinite(mu_hit), gap, 0.0)
    return b0, mu_hit, a1


def _kinked_segments(z, s_left, s_right, w):
    """Trajectories for ``f(t) = s_right*t (t > 0), s_left*t (t < 0)`` on R.

    Each component has up to two events: reaching 0 (offset ``-z``) and
    leaving 0 on the other side. Returns ``b0`` and two events each as
    ``(mu, a, b)`` arrays.
    """
    n = z.size
    inf = np.full(n, np.inf)
    zero = np.zeros(n)
    b0 = np.zeros(n)
    mu1, a1, b1 = inf.copy(), zero.copy(), zero.copy()
    mu2, a2, b2 = inf.copy(), zero.copy(), zero.copy()

    pos = z > 0
    neg = z < 0
    at0 = z == 0
    # start on the positive side
    up = pos & (s_right >= 0)
    b0[up] = s_right[up] / w[up]
    down = pos & (s_right < 0)
    b0[down] = s_right[down] / w[down]
    mu1[down] = -z[down] * w[down] / s_right[down]
    a1[down] = -z[down]
    cross = down & (s_left < 0)
    mu2[cross] = -z[cross] * w[cross] / s_left[cross]
    b2[cross] = s_left[cross] / w[cross]
    # start on the negative side
    dn = neg & (s_left <= 0)
    b0[dn] = s_left[dn] / w[dn]
    upn = neg & (s_left > 0)
    b0[upn] = s_left[upn] / w[upn]
    mu1[upn] = -z[upn] * w[upn] / s_left[upn]
    a1[upn] = -z[upn]
    crossn = upn & (s_right > 0)
    mu2[crossn] = -z[crossn] * w[crossn] / s_right[crossn]
    b2[crossn] = s_right[crossn] / w[crossn]
    # start at the kink
    r0 = at0 & (s_right > 0)
    b0[r0] = s_right[r0] / w[r0]
    l0 = at0 & (s_left < 0)
    b0[l0] = s_left[l0] / w[l0]
    # a2 is 0 by construction (the line through the origin)
    return b0, (mu1, a1, b1), (mu2, a2, b2)


def _solve_radius(w, b0, events, r_sq):
    """Largest ``mu`` with ``sum w (a + b mu)^2 <= r_sq``; may be ``inf``.

    ``events`` is a list of ``(component, mu, a_old, b_old, a_new, b_new)``
    arrays; at ``mu`` the component's offset switches from ``a_old + b_old mu``
    to ``a_new + b_new mu``.
    """
    comp, mu, a_old, b_old, a_new, b_new = (np.concatenate(parts) for parts in zip(*events))
    keep = np.isfinite(mu)
    mu, a_old, b_old, a_new, b_new = mu[keep], a_old[keep], b_old[keep], a_new[keep], b_new[keep]
    ww = w[comp[keep]]
    order = np.argsort(mu, kind="stable")
    mu, a_old, b_old, a_new, b_new, ww = (v[order] for v in (mu, a_old, b_old, a_new, b_new, ww))

    # coefficients of d^2(mu) = q0 + 2 q1 mu + q2 mu^2 on each segment
    d0 = np.concatenate([[0.0], np.cumsum(ww * (a_new**2 - a_old**2))])
    d1 = np.concatenate([[0.0], np.cumsum(ww * (a_new * b_new - a_old * b_old))])
    d2 = float(np.sum(w * b0**2)) + np.concatenate([[0.0], np.cumsum(ww * (b_new**2 - b_old**2))])
    starts = np.concatenate([[0.0], mu])
    ends = np.concatenate([mu, [np.inf]])
    with np.errstate(invalid="ignore", over="ignore"):
        at_end = d0 + 2.0 * d1 * ends + d2 * ends**2
    # the last segment reaches any radius unless it has stopped moving
    at_end[-1] = np.inf if d2[-1] > 0 else d0[-1]
    hit = np.flatnonzero(at_end >= r_sq)
    if hit.size == 0:
        return math.inf
    s = hit[0]
    q0, q1, q2 = d0[s] - r_sq, d1[s], d2[s]
    if q2 <= 0:
        return float(starts[s])
    disc = max(q1 * q1 - q2 * q0, 0.0)
    root = (-q1 + math.sqrt(disc)) / q2
    return float(min(max(root, starts[s]), ends[s]))


def _offsets_at(mu_star, b0, events, size):
    delta = b0 * mu_star if math.isfinite(mu_star) else np.zeros(size)
    for comp, mu_e, _, _, a_e, b_e in events:
        reached = np.isfinite(mu_e) & (mu_e <= mu_star)
        moving = b_e[reached] != 0
        val = a_e[reached].copy()
        val[moving] += b_e[reached][moving] * mu_star
        delta[comp[reached]] = val
    return delta


def gap_maximizer(problem: LpProblem, x, y, radius: float, omega: float,
                  ax=None, aty=None):
    """Point of the ``omega``-ball around ``(x, y)`` maximizing the Lagrangian gap.

    Returns ``(x_hat, y_hat, gap)``. The gap is separable and concave; a
    single ball multiplier ``1/mu`` ties the components together and each
    component moves piecewise linearly in ``mu``, so sorting the breakpoints
    pins down ``mu`` exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ax = problem.matrix @ x if ax is None else ax
    aty = problem.matrix_csc.T @ y if aty is None else aty
    n, m = x.size, y.size

    # x block: maximize -(c - A'y)'x_hat over the variable box
    sx = -(problem.objective - aty)
    wx = np.full(n, omega)
    bx, mux, ax1 = _linear_segments(x, sx, wx, problem.var_lower, problem.var_upper)

    # y block: -y_hat'Ax - p(y_hat; -u, -l) over Y, kinked at 0 for ranged rows
    ylo, yhi = dual_box(problem.con_lower, problem.con_upper)
    ranged = np.isfinite(problem.con_lower) & np.isfinite(problem.con_upper)
    with np.errstate(invalid="ignore"):
        s_right = problem.con_lower - ax
        s_left = problem.con_upper - ax
    s_lin = np.where(np.isfinite(problem.con_lower), s_right,
                     np.where(np.isfinite(problem.con_upper), s_left, 0.0))
    wy = np.full(m, 1.0 / omega)
    li = np.flatnonzero(~ranged)
    ki = np.flatnonzero(ranged)
    by_lin, muy_lin, ay_lin = _linear_segments(y[li], s_lin[li], wy[li], ylo[li], yhi[li])
    by_k, (mu1, a1, b1), (mu2, a2, b2) = _kinked_segments(y[ki], s_left[ki], s_right[ki], wy[ki])

    w = np.concatenate([wx, wy])
    b0 = np.zeros(n + m)
    b0[:n] = bx
    b0[n + li] = by_lin
    b0[n + ki] = by_k
    zl, zk = np.zeros(li.size), np.zeros(ki.size)
    events = [
        (np.arange(n), mux, np.zeros(n), bx, ax1, np.zeros(n)),
        (n + li, muy_lin, zl, by_lin, ay_lin, zl),
        (n + ki, mu1, zk, by_k, a1, b1),
        (n + ki, mu2, a1, b1, a2, b2),
    ]
    mu_star = 0.0 if radius <= 0 else _solve_radius(w, b0, events, radius * radius)
    delta = _offsets_at(mu_star, b0, events, n + m)

    x_hat = np.clip(x + delta[:n], problem.var_lower, problem.var_upper)
    y_hat = np.clip(y + delta[n:], ylo, yhi)

    gap = float(sx @ (x_hat - x))
    gap += float(s_lin[li] @ (y_hat[li] - y[li]))
    yk, yhk = y[ki], y_hat[ki]
    sr, sl = s_right[ki], s_left[ki]
    gap += float(np.sum(np.where(yhk > 0, sr * yhk, sl * yhk) - np.where(yk > 0, sr * yk, sl * yk)))
    return x_hat, y_hat, gap


def normalized_duality_gap(problem: LpProblem, x, y, radius: float, omega: float,
                           ax=None, aty=None) -> float:
    """Max Lagrangian gap over the ``omega``-ball of ``radius``, divided by ``radius``."""
    if radius <= 0:
        return 0.0
    _, _, gap = gap_maximizer(problem, x, y, radius, omega, ax, aty)
    return max(gap, 0.0) / radius


# --- restart decisions -----------------------------------------------------

def restart_candidate(mu_current: float, mu_average: float) -> str:
    """``"current"`` when it has strictly smaller gap, otherwise ``"average"``."""
    return "current" if mu_current < mu_average else "average"


def should_restart(candidate_mu: float, ledger: RestartLedger, t: int, k: int,
                   thresholds: RestartThresholds = RestartThresholds()) -> RestartReason:
    last = ledger.mu_at_last_restart
    if not math.isfinite(last):
        # no reference gap yet: only the long-inner-loop rule applies
        if t >= thresholds.beta_artificial * k:
            return RestartReason.ARTIFICIAL
        return RestartReason.NO
    if candidate_mu <= thresholds.beta_sufficient * last:
        return RestartReason.SUFFICIENT_DECAY
    if (candidate_mu <= thresholds.beta_necessary * last
            and candidate_mu > ledger.previous_candidate_mu):
        return RestartReason.NECESSARY_PLUS_STALL
    if t >= thresholds.beta_artificial * k:
        return RestartReason.ARTIFICIAL
    return RestartReason.NO


# --- primal weight -----------------------------------------------------------

def combine_bounds(lower, upper) -> np.ndarray:
    """``max(0, |l|*, |u|*)`` with ``|v|* = 0`` for infinite ``v``."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    lo = np.where(np.isfinite(lower), np.abs(lower), 0.0)
    hi = np.where(np.isfinite(upper), np.abs(upper), 0.0)
    return np.maximum(0.0, np.maximum(lo, hi))


def initialize_primal_weight(problem: LpProblem, eps_zero: float = EPS_ZERO) -> float:
    c_norm = float(np.linalg.norm(problem.objective))
    b_norm = float(np.linalg.norm(combine_bounds(problem.con_lower, problem.con_upper)))
    if c_norm > eps_zero and b_norm > eps_zero:
        return c_norm / b_norm
    return 1.0


def update_primal_weight(delta_x: float, delta_y: float, omega_prev: float,
                         theta: float = PRIMAL_WEIGHT_SMOOTHING,
                         eps_zero: float = EPS_ZERO) -> float:
    """Log-scale exponential smoothing of ``delta_y / delta_x``.

    ``delta_x``/``delta_y`` are the Euclidean distances the primal and dual
    parts moved between consecutive restart points.
    """
    if delta_x > eps_zero and delta_y > eps_zero:
        return math.exp(theta * math.log(delta_y / delta_x) + (1.0 - theta) * math.log(omega_prev))
    return omega_prev
