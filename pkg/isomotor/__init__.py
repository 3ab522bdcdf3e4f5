"""isomotor

Isogeometric magnetostatics of a quarter synchronous reluctance machine with
permanent magnets, adjoint torque sensitivities and gradient based shape and
parameter optimization.

"""

from ._settings import settings
from .cli import DesignFile, RunConfig, main
from .geometry import DesignSpace, DesignVector, MachineTemplate, ParameterSet, TemplateResolution
from .optimize import DesignProblem, ObjectiveWeights, OptimizationConfig, evaluate_objective, optimize
from .solver import TorqueProfile, solve_magnetostatic, sweep, torque

__all__ = [
    "settings",
    "ParameterSet",
    "DesignSpace",
    "DesignVector",
    "MachineTemplate",
    "TemplateResolution",
    "solve_magnetostatic",
    "sweep",
    "torque",
    "TorqueProfile",
    "DesignProblem",
    "ObjectiveWeights",
    "OptimizationConfig",
    "evaluate_objective",
    "optimize",
    "RunConfig",
    "DesignFile",
    "main",
]
