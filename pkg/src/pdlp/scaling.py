"""Diagonal preconditioning: Ruiz equilibration followed by Pock-Chambolle.

Convention: a pass produces root-norm factors ``d_row``, ``d_col`` and the
scaled matrix is ``A_ij / (d_row_i * d_col_j)``. ``RescalingInfo`` keeps the
cumulative *reciprocals*, i.e. the diagonals of ``D1`` and ``D2`` in
``A~ = D1 A D2``, so that ``x = col_scale * x~`` and ``y = row_scale * y~``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from pdlp.problem import InvalidProblemError, LpProblem

RUIZ_ITERATIONS = 10
POCK_CHAMBOLLE_ALPHA = 1.0


@dataclass(frozen=True, eq=False)
class RescalingInfo:
    row_scale: np.ndarray  # diag(D1), length m
    col_scale: np.ndarray  # diag(D2), length n

    @classmethod
    def identity(cls, m: int, n: int) -> "RescalingInfo":
        return cls(np.ones(m), np.ones(n))


def _safe_root(norms: np.ndarray) -> np.ndarray:
    # zero rows/columns are left alone
    return np.where(norms > 0, np.sqrt(norms), 1.0)


def _pnorm_rows(A: sp.csr_matrix, p: float) -> np.ndarray:
    absA = abs(A)
    if p == np.inf:
        return np.asarray(absA.max(axis=1).todense()).ravel()
    if p == 0:
        return np.diff(A.indptr).astype(np.float64)
    if p == 1:
        return np.asarray(absA.sum(axis=1)).ravel()
    return np.asarray(absA.power(p).sum(axis=1)).ravel() ** (1.0 / p)


def ruiz_pass(A) -> tuple[np.ndarray, np.ndarray]:
    """Root infinity-norms of rows and columns (1 for empty ones)."""
    A = sp.csr_matrix(A)
    return (_safe_root(_pnorm_rows(A, np.inf)),
            _safe_root(_pnorm_rows(A.T.tocsr(), np.inf)))


def pock_chambolle_pass(A, alpha: float = POCK_CHAMBOLLE_ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Root ``(2 - alpha)``-norms of rows and root ``alpha``-norms of columns."""
    if not 0.0 <= alpha <= 2.0:
        raise ValueError("alpha must lie in [0, 2]")
    A = sp.csr_matrix(A)
    return (_safe_root(_pnorm_rows(A, 2.0 - alpha)),
            _safe_root(_pnorm_rows(A.T.tocsr(), alpha)))


def divide_by_factors(A, row_factors, col_factors) -> sp.csr_matrix:
    return (sp.diags(1.0 / row_factors) @ sp.csr_matrix(A) @ sp.diags(1.0 / col_factors)).tocsr()


def scale_problem(problem: LpProblem, info: RescalingInfo) -> LpProblem:
    """Apply ``D1``/``D2`` to every piece of problem data."""
    D1, D2 = info.row_scale, info.col_scale
    # positive finite factors keep infinities infinite
    return problem.replace(
        matrix=(sp.diags(D1) @ problem.matrix @ sp.diags(D2)).tocsr(),
        objective=problem.objective * D2,
        con_lower=problem.con_lower * D1,
        con_upper=problem.con_upper * D1,
        var_lower=problem.var_lower / D2,
        var_upper=problem.var_upper / D2,
    )


def apply_rescaling(
    problem: LpProblem,
    ruiz_iterations: int = RUIZ_ITERATIONS,
    alpha: float | None = POCK_CHAMBOLLE_ALPHA,
) -> tuple[LpProblem, RescalingInfo]:
    """Ruiz passes then one Pock-Chambolle pass; returns the scaled problem.

    Pass ``alpha=None`` to skip the Pock-Chambolle step.
    """
    if not np.all(np.isfinite(problem.matrix.data)):
        raise InvalidProblemError("non-finite matrix entry")
    m, n = problem.num_cons, problem.num_vars
    row_total = np.ones(m)
    col_total = np.ones(n)
    A = problem.matrix.copy()
    for _ in range(ruiz_iterations):
        r, c = ruiz_pass(A)
        A = divide_by_factors(A, r, c)
        row_total *= r
        col_total *= c
    if alpha is not None:
        r, c = pock_chambolle_pass(A, alpha)
        row_total *= r
        col_total *= c
    info = RescalingInfo(1.0 / row_total, 1.0 / col_total)
    return scale_problem(problem, info), info


def unscale_solution(x_scaled, y_scaled, r_scaled, info: RescalingInfo):
    """Map a scaled-space point ``(x~, y~, r~)`` back to original units."""
    x = np.asarray(x_scaled) * info.col_scale
    y = np.asarray(y_scaled) * info.row_scale
    r = np.asarray(r_scaled) / info.col_scale
    return x, y, r


def scale_solution(x, y, r, info: RescalingInfo):
    """Inverse of :func:`unscale_solution`."""
    return (np.asarray(x) / info.col_scale,
            np.asarray(y) / info.row_scale,
            np.asarray(r) * info.col_scale)
