"""hp continuous Galerkin time stepping for nonlinear initial value problems."""

from .analysis import ConvergenceRow, dof, eoc, l2_error, linf_error
from .cg_core import (
    POINCARE_CONSTANT,
    CgSolution,
    ConvergenceError,
    IterationConfig,
    NonFiniteError,
    Scheme,
    SingularOperatorError,
    SolverError,
    StepBoundWarning,
    StepReport,
    contraction_bound,
    solve,
    solve_interval,
    step_bound,
)
from .partition import TimePartition, bisect, raise_order, uniform
from .problem import OdeProblem, example1, example2, example3, get_problem

__all__ = [
    "POINCARE_CONSTANT",
    "CgSolution",
    "ConvergenceError",
    "ConvergenceRow",
    "IterationConfig",
    "NonFiniteError",
    "OdeProblem",
    "Scheme",
    "SingularOperatorError",
    "SolverError",
    "StepBoundWarning",
    "StepReport",
    "TimePartition",
    "bisect",
    "contraction_bound",
    "dof",
    "eoc",
    "example1",
    "example2",
    "example3",
    "get_problem",
    "l2_error",
    "linf_error",
    "raise_order",
    "solve",
    "solve_interval",
    "step_bound",
    "uniform",
]
