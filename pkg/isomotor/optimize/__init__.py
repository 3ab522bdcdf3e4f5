"""Weighted design objective and the augmented Lagrangian optimizer"""

from ._auglag import (
    AbortSearch,
    AugmentedLagrangianResult,
    SolverOptions,
    minimize_augmented_lagrangian,
    projected_gradient,
)
from ._driver import HISTORY_COLUMNS, HistoryWriter, IterationRecord, OptimizationResult, PhaseResult, optimize
from ._objective import (
    FAILURE_VALUE,
    ObjectiveEvaluation,
    ObjectiveWeights,
    OptimizationConfig,
    Phase,
    evaluate_objective,
)
from ._problem import DesignProblem, DesignState

__all__ = [
    "DesignProblem",
    "DesignState",
    "FAILURE_VALUE",
    "ObjectiveWeights",
    "OptimizationConfig",
    "Phase",
    "ObjectiveEvaluation",
    "evaluate_objective",
    "SolverOptions",
    "AbortSearch",
    "AugmentedLagrangianResult",
    "projected_gradient",
    "minimize_augmented_lagrangian",
    "HISTORY_COLUMNS",
    "IterationRecord",
    "HistoryWriter",
    "PhaseResult",
    "OptimizationResult",
    "optimize",
]
