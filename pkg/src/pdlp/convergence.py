"""Reduced costs, KKT residuals, termination and infeasibility certificates."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from pdlp.problem import LpProblem, dual_box, dual_penalty

EPS_RAY = 1e-12


class ReducedCostMode(enum.Enum):
    NATURAL = "natural"
    BOUND_ROBUST = "bound-robust"


def recover_reduced_costs(problem: LpProblem, x, y, mode=ReducedCostMode.NATURAL,
                          aty=None) -> np.ndarray:
    """Reduced costs ``r`` from ``c - A'y``.

    ``natural`` projects onto R. ``bound-robust`` keeps the residual only for
    variables sitting relatively close to the bound the sign points at, which
    stops huge but inactive bounds from polluting the dual objective.
    """
    mode = ReducedCostMode(mode)
    aty = problem.matrix_csc.T @ np.asarray(y) if aty is None else aty
    g = problem.objective - aty
    rlo, rhi = dual_box(problem.var_lower, problem.var_upper)
    if mode is ReducedCostMode.NATURAL:
        return np.clip(g, rlo, rhi)
    x = np.asarray(x, dtype=np.float64)
    absx = np.abs(x)
    with np.errstate(invalid="ignore"):
        near_lower = (x - problem.var_lower) <= absx
        near_upper = (problem.var_upper - x) <= absx
    keep = ((g > 0) & near_lower) | ((g < 0) & near_upper)
    # an infinite bound is never "near", so r stays inside R
    return np.where(keep, g, 0.0)


@dataclass
class ResidualSummary:
    primal_inf_norm: float
    dual_inf_norm: float
    primal_objective: float
    dual_objective: float
    abs_gap: float
    rel_gap: float

    def as_dict(self) -> dict:
        return dict(vars(self))


def interval_distance(v, lower, upper) -> np.ndarray:
    """Componentwise distance of ``v`` to ``[lower, upper]``."""
    v = np.asarray(v, dtype=np.float64)
    return np.maximum(np.maximum(lower - v, v - upper), 0.0)


def relative_gap(primal_objective: float, dual_objective: float) -> tuple[float, float]:
    abs_gap = abs(primal_objective - dual_objective)
    denom = max(abs(primal_objective), abs(dual_objective))
    if abs_gap == 0.0:
        return 0.0, 0.0
    if denom == 0.0:
        return abs_gap, np.inf
    return abs_gap, abs_gap / denom


def dual_objective(problem: LpProblem, y, r) -> float:
    """``-p(-y; l_c, u_c) - p(-r; l_v, u_v)``."""
    y = np.asarray(y, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    return -dual_penalty(-y, problem.con_lower, problem.con_upper) - dual_penalty(
        -r, problem.var_lower, problem.var_upper)


def kkt_residuals(problem: LpProblem, x, y, r, ax=None, aty=None) -> ResidualSummary:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    ax = problem.matrix @ x if ax is None else ax
    aty = problem.matrix_csc.T @ y if aty is None else aty
    primal = interval_distance(ax, problem.con_lower, problem.con_upper)
    bound = interval_distance(x, problem.var_lower, problem.var_upper)
    dual = np.abs(problem.objective - aty - r)
    pobj = float(problem.objective @ x) + problem.objective_offset
    dobj = dual_objective(problem, y, r) + problem.objective_offset
    abs_gap, rel_gap = relative_gap(pobj, dobj)
    return ResidualSummary(
        primal_inf_norm=float(max(primal.max(initial=0.0), bound.max(initial=0.0))),
        dual_inf_norm=float(dual.max(initial=0.0)),
        primal_objective=pobj,
        dual_objective=dobj,
        abs_gap=abs_gap,
        rel_gap=rel_gap,
    )


@dataclass(frozen=True)
class Tolerances:
    eps_primal: float = 1e-8
    eps_dual: float = 1e-8
    eps_rel_gap: float = 1e-2


def check_termination(summary: ResidualSummary, tol: Tolerances = Tolerances()) -> str | None:
    """``"optimal"`` when all three measures pass, else ``None``."""
    if (summary.primal_inf_norm <= tol.eps_primal
            and summary.dual_inf_norm <= tol.eps_dual
            and summary.rel_gap <= tol.eps_rel_gap):
        return "optimal"
    return None


# --- infeasibility -------------------------------------------------------------

class CertificateKind(enum.Enum):
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"


@dataclass
class InfeasibilityCertificate:
    kind: CertificateKind
    ray: np.ndarray  # y-ray for primal infeasibility, x-ray for dual infeasibility
    reduced_cost_ray: np.ndarray | None
    residual: float  # homogeneous residual, l-inf
    objective: float  # ray objective; > 0 (dual ray) or < 0 (primal ray)
    source: str = ""

    def quality(self) -> dict:
        scale = float(np.max(np.abs(self.ray), initial=0.0))
        return {
            "kind": self.kind.value,
            "source": self.source,
            "homogeneous_residual": self.residual,
            "ray_objective": self.objective,
            "ray_inf_norm": scale,
        }


def recession_violation(v, lower, upper) -> np.ndarray:
    """Distance of ``v`` to the recession cone of ``[lower, upper]``."""
    v = np.asarray(v, dtype=np.float64)
    lo_fin = np.isfinite(lower)
    hi_fin = np.isfinite(upper)
    below = np.where(lo_fin, np.maximum(-v, 0.0), 0.0)
    above = np.where(hi_fin, np.maximum(v, 0.0), 0.0)
    return below + above


def dual_ray_certificate(problem: LpProblem, y_ray, eps_ray: float = EPS_RAY,
                         aty=None) -> InfeasibilityCertificate | None:
    """Farkas-type test: ``y`` in Y, ``-A'y`` in R (nearly) and positive ray objective."""
    y = np.asarray(y_ray, dtype=np.float64)
    scale = float(np.max(np.abs(y), initial=0.0))
    if scale == 0.0 or not np.all(np.isfinite(y)):
        return None
    ylo, yhi = dual_box(problem.con_lower, problem.con_upper)
    if np.any(y < ylo) or np.any(y > yhi):
        return None
    aty = problem.matrix_csc.T @ y if aty is None else aty
    rlo, rhi = dual_box(problem.var_lower, problem.var_upper)
    r = np.clip(-aty, rlo, rhi)
    residual = float(np.max(np.abs(aty + r), initial=0.0))
    obj = dual_objective(problem, y, r)
    if residual <= eps_ray * scale and obj > 0:
        return InfeasibilityCertificate(CertificateKind.PRIMAL_INFEASIBLE, y, r, residual, obj)
    return None


def primal_ray_certificate(problem: LpProblem, x_ray, eps_ray: float = EPS_RAY,
                           ax=None) -> InfeasibilityCertificate | None:
    """Unboundedness test: ``x`` and ``A x`` in the recession cones, ``c'x < 0``."""
    x = np.asarray(x_ray, dtype=np.float64)
    scale = float(np.max(np.abs(x), initial=0.0))
    if scale == 0.0 or not np.all(np.isfinite(x)):
        return None
    ax = problem.matrix @ x if ax is None else ax
    residual = float(max(
        recession_violation(x, problem.var_lower, problem.var_upper).max(initial=0.0),
        recession_violation(ax, problem.con_lower, problem.con_upper).max(initial=0.0)))
    obj = float(problem.objective @ x)
    if residual <= eps_ray * scale and obj < 0:
        return InfeasibilityCertificate(CertificateKind.DUAL_INFEASIBLE, x, None, residual, obj)
    return None


@dataclass
class RayCandidate:
    name: str
    x: np.ndarray
    y: np.ndarray


def check_infeasibility(problem: LpProblem, candidates, eps_ray: float = EPS_RAY
                        ) -> InfeasibilityCertificate | None:
    """Try each candidate ``(x, y)`` in order; the first certificate found wins.

    Each candidate's ``y`` is tested as a dual ray and its ``x`` as a primal ray.
    """
    for cand in candidates:
        if not (np.all(np.isfinite(cand.x)) and np.all(np.isfinite(cand.y))):
            continue
        cert = dual_ray_certificate(problem, cand.y, eps_ray)
        if cert is None:
            cert = primal_ray_certificate(problem, cand.x, eps_ray)
        if cert is not None:
            cert.source = cand.name
            return cert
    return None


def verify_certificate(problem: LpProblem, cert: InfeasibilityCertificate,
                       eps_ray: float = EPS_RAY) -> bool:
    """Recheck a certificate from scratch (used by ``check`` and tests)."""
    if cert.kind is CertificateKind.PRIMAL_INFEASIBLE:
        return dual_ray_certificate(problem, cert.ray, eps_ray) is not None
    return primal_ray_certificate(problem, cert.ray, eps_ray) is not None
