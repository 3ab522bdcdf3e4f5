"""Galerkin assembly of stiffness, sources, mortar coupling and the saddle point system"""

from ._coupling import assemble_coupling, harmonic_set, point_coupling, rotation_matrix
from ._dofs import DofMap
from ._quadrature import EdgeRule, Kinematics, QuadratureRule, gauss_points, kinematics
from ._sources import ExcitationState, assemble_rhs, coil_areas, point_rhs
from ._stiffness import (
    FIELD_FLOOR,
    assemble_stiffness,
    newton_jacobian,
    point_stiffness,
    potential_gradient,
    quadrature_rules,
)
from ._system import AssembledSystem, SystemBuilder, max_admissible_harmonic

__all__ = [
    "gauss_points",
    "QuadratureRule",
    "EdgeRule",
    "Kinematics",
    "kinematics",
    "quadrature_rules",
    "DofMap",
    "FIELD_FLOOR",
    "potential_gradient",
    "point_stiffness",
    "assemble_stiffness",
    "newton_jacobian",
    "ExcitationState",
    "coil_areas",
    "point_rhs",
    "assemble_rhs",
    "harmonic_set",
    "point_coupling",
    "assemble_coupling",
    "rotation_matrix",
    "AssembledSystem",
    "SystemBuilder",
    "max_admissible_harmonic",
]
