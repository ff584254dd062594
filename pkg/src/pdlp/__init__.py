"""Restarted primal-dual hybrid gradient for linear programming."""

from pdlp.generate import GeneratedInstance, generate_instance
from pdlp.mps import MpsError, UnsupportedFeatureError, parse_mps, read_mps, write_mps
from pdlp.output import read_solution, write_solution
from pdlp.problem import (
    FeasibilityKind,
    FeasibilitySubproblem,
    InvalidProblemError,
    LpProblem,
    build_dual_feasibility,
    build_primal_feasibility,
    dual_penalty,
    lagrangian,
    validate,
)
from pdlp.solver import SolveResult, SolverOptions, Status, solve

__version__ = "0.1.0"
