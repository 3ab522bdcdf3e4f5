"""Nonlinear magnetostatic solves, torque and angle sweeps"""

from ._fields import FieldSample, l2_error, point_load, sample_field, solve_dirichlet_problem
from ._newton import STALL_TOLERANCE, ConvergenceRecord, FieldSolution, factorize, solve_magnetostatic
from ._torque import SweepResult, TorqueProfile, angle_range, sweep, torque

__all__ = [
    "STALL_TOLERANCE",
    "ConvergenceRecord",
    "FieldSolution",
    "factorize",
    "solve_magnetostatic",
    "torque",
    "TorqueProfile",
    "SweepResult",
    "sweep",
    "angle_range",
    "FieldSample",
    "sample_field",
    "l2_error",
    "point_load",
    "solve_dirichlet_problem",
]
