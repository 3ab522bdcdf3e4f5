"""Adjoint solves and torque derivatives with respect to control points and design coordinates"""

from ._adjoint import AdjointSolution, solve_adjoint, torque_state_gradient
from ._chain import (
    RIPPLE_FLOOR,
    AngleSensitivity,
    SensitivityBundle,
    angle_sensitivity,
    design_gradient,
    dT_dP,
    sweep_sensitivities,
    torque_stats_gradient,
)
from ._shape import check_pairing, dT_dC, dT_dmagnet_angle, dT_dphase

__all__ = [
    "AdjointSolution",
    "torque_state_gradient",
    "solve_adjoint",
    "check_pairing",
    "dT_dC",
    "dT_dmagnet_angle",
    "dT_dphase",
    "RIPPLE_FLOOR",
    "dT_dP",
    "design_gradient",
    "torque_stats_gradient",
    "AngleSensitivity",
    "SensitivityBundle",
    "angle_sensitivity",
    "sweep_sensitivities",
]
