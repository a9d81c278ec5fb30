"""Restarted accelerated proximal gradient and coordinate descent methods."""

from . import approx_efficient, oracle, problems, restart, schedule, solvers
from .problems import CompositeProblem, SparseDesign, lasso_problem, logistic_problem
from .restart import (
    ApproxCombination,
    ConditionalAtX,
    ConditionalAtZ,
    FixedCombination,
    FunctionValueAdaptive,
    IntervalAdaptive,
    NoRestart,
)
from .solvers import RunTrace, StopRule, compute_reference, run

__version__ = "0.1.0"

__all__ = [
    "approx_efficient", "oracle", "problems", "restart", "schedule", "solvers",
    "CompositeProblem", "SparseDesign", "lasso_problem", "logistic_problem",
    "ApproxCombination", "ConditionalAtX", "ConditionalAtZ", "FixedCombination",
    "FunctionValueAdaptive", "IntervalAdaptive", "NoRestart",
    "RunTrace", "StopRule", "compute_reference", "run",
]
