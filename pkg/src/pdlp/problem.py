"""In-memory LP model.

The problem is

    minimize    c'x
    subject to  con_lower <= A x <= con_upper
                var_lower <= x   <= var_upper

with infinite bounds stored as IEEE infinities. The dual sets Y (for the
row multipliers) and R (for the reduced costs) are never stored; they are
read off bound finiteness by :func:`dual_box`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

INDEX_DTYPE = np.int64


class InvalidProblemError(ValueError):
    pass


def _as_csr(matrix) -> sp.csr_matrix:
    A = sp.csr_matrix(matrix, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    A.indptr = A.indptr.astype(INDEX_DTYPE, copy=False)
    A.indices = A.indices.astype(INDEX_DTYPE, copy=False)
    return A


def _as_csc(A: sp.csr_matrix) -> sp.csc_matrix:
    C = A.tocsc()
    C.sort_indices()
    C.indptr = C.indptr.astype(INDEX_DTYPE, copy=False)
    C.indices = C.indices.astype(INDEX_DTYPE, copy=False)
    return C


@dataclass(frozen=True, eq=False)
class LpProblem:
    """An LP in the two-sided form above.

    ``matrix`` is held in CSR; ``matrix_csc`` is derived once at construction
    so that both ``A x`` and ``A' y`` are computed with output ownership.
    """

    matrix: sp.csr_matrix
    objective: np.ndarray
    con_lower: np.ndarray
    con_upper: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray
    objective_offset: float = 0.0
    name: str = ""
    var_names: list[str] | None = None
    con_names: list[str] | None = None
    # the stored objective is always minimized; reports flip the sign back
    maximize: bool = False
    matrix_csc: sp.csc_matrix = field(init=False, repr=False)

    def __post_init__(self):
        A = _as_csr(self.matrix)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "matrix_csc", _as_csc(A))
        for name in ("objective", "con_lower", "con_upper", "var_lower", "var_upper"):
            v = np.array(getattr(self, name), dtype=np.float64).ravel()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        m, n = A.shape
        for name, size in (
            ("objective", n),
            ("con_lower", m),
            ("con_upper", m),
            ("var_lower", n),
            ("var_upper", n),
        ):
            if getattr(self, name).shape != (size,):
                raise InvalidProblemError(
                    f"{name} has length {getattr(self, name).size}, expected {size}"
                )

    @property
    def num_vars(self) -> int:
        return self.matrix.shape[1]

    @property
    def num_cons(self) -> int:
        return self.matrix.shape[0]

    def replace(self, **changes) -> "LpProblem":
        fields = dict(
            matrix=self.matrix,
            objective=self.objective,
            con_lower=self.con_lower,
            con_upper=self.con_upper,
            var_lower=self.var_lower,
            var_upper=self.var_upper,
            objective_offset=self.objective_offset,
            name=self.name,
            var_names=self.var_names,
            con_names=self.con_names,
            maximize=self.maximize,
        )
        fields.update(changes)
        return LpProblem(**fields)


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: int | None = None

    def __str__(self) -> str:
        if self.index is None:
            return self.invariant
        return f"{self.invariant} at index {self.index}"


def _first_true(mask: np.ndarray) -> int | None:
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def validate(problem: LpProblem) -> Violation | None:
    """Return ``None`` for a well-formed problem, else the first violation found."""
    data = problem.matrix.data
    if (i := _first_true(~np.isfinite(data))) is not None:
        return Violation("non-finite matrix entry", i)
    if (i := _first_true(~np.isfinite(problem.objective))) is not None:
        return Violation("non-finite objective entry", i)
    for kind, lo, hi in (
        ("con", problem.con_lower, problem.con_upper),
        ("var", problem.var_lower, problem.var_upper),
    ):
        if (i := _first_true(np.isnan(lo) | np.isnan(hi))) is not None:
            return Violation(f"{kind} bound is NaN", i)
        if (i := _first_true(lo == np.inf)) is not None:
            return Violation(f"{kind} lower bound is +inf", i)
        if (i := _first_true(hi == -np.inf)) is not None:
            return Violation(f"{kind} upper bound is -inf", i)
        if (i := _first_true(lo > hi)) is not None:
            return Violation(f"{kind} bound crossing", i)
    A, C = problem.matrix, problem.matrix_csc
    if A.nnz != C.nnz or (A != C.tocsr()).nnz:
        return Violation("row-major and column-major layouts differ")
    return None


def check(problem: LpProblem) -> LpProblem:
    """Raise :class:`InvalidProblemError` unless ``problem`` validates."""
    violation = validate(problem)
    if violation is not None:
        raise InvalidProblemError(str(violation))
    return problem


def dual_box(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interval form of the dual set induced by primal bounds.

    Free -> {0}; upper only -> (-inf, 0]; lower only -> [0, inf); both -> R.
    Used for Y (from constraint bounds) and R (from variable bounds).
    """
    # a finite upper bound admits negative multipliers, a finite lower bound positive ones
    dlo = np.where(np.isfinite(upper), -np.inf, 0.0)
    dhi = np.where(np.isfinite(lower), np.inf, 0.0)
    return dlo, dhi


def dual_penalty(y, lower, upper) -> float:
    """``upper'y+ - lower'y-`` with the convention ``0 * inf = 0``."""
    y = np.asarray(y, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    pos = y > 0
    neg = y < 0
    total = np.dot(upper[pos], y[pos]) + np.dot(lower[neg], y[neg])
    return float(total)


def lagrangian(problem: LpProblem, x, y) -> float:
    """``c'x - y'Ax - p(y; -u_c, -l_c)``, the saddle function PDHG works on."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Ax = problem.matrix @ x
    return float(
        problem.objective @ x
        - y @ Ax
        - dual_penalty(y, -problem.con_upper, -problem.con_lower)
    )


class FeasibilityKind(enum.Enum):
    PRIMAL = "primal-feasibility"
    DUAL = "dual-feasibility"


@dataclass(frozen=True, eq=False)
class FeasibilitySubproblem:
    """Zero-objective LP plus how its variables map onto the parent.

    ``embedding`` names the parent vector the subproblem's variables stand
    for ("x" or "y") and ``index`` gives the parent component of each.
    """

    problem: LpProblem
    kind: FeasibilityKind
    embedding: str
    index: np.ndarray


def build_primal_feasibility(problem: LpProblem) -> FeasibilitySubproblem:
    sub = problem.replace(
        objective=np.zeros(problem.num_vars), objective_offset=0.0,
        name=f"{problem.name}:primal-feasibility",
    )
    return FeasibilitySubproblem(
        sub, FeasibilityKind.PRIMAL, "x", np.arange(problem.num_vars, dtype=INDEX_DTYPE)
    )


def build_dual_feasibility(problem: LpProblem) -> FeasibilitySubproblem:
    """Feasibility problem over the row multipliers.

    Variables ``y`` live in Y; row ``j`` asks ``c_j - (A'y)_j`` to lie in R_j,
    i.e. ``(A'y)_j`` in ``[c_j - sup R_j, c_j - inf R_j]``.
    """
    ylo, yhi = dual_box(problem.con_lower, problem.con_upper)
    rlo, rhi = dual_box(problem.var_lower, problem.var_upper)
    c = problem.objective
    with np.errstate(invalid="ignore"):
        row_lo = c - rhi
        row_hi = c - rlo
    sub = LpProblem(
        matrix=problem.matrix_csc.transpose().tocsr(),
        objective=np.zeros(problem.num_cons),
        con_lower=row_lo,
        con_upper=row_hi,
        var_lower=ylo,
        var_upper=yhi,
        name=f"{problem.name}:dual-feasibility",
    )
    return FeasibilitySubproblem(
        sub, FeasibilityKind.DUAL, "y", np.arange(problem.num_cons, dtype=INDEX_DTYPE)
    )
