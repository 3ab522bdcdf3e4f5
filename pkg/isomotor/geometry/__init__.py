"""Parametric machine template, design scaling, offsets and geometric measures"""

from ._jacobian import (
    GeometryBuilder,
    PhysicalDerivatives,
    control_point_jacobian,
    offset_jacobian,
    parameter_jacobian,
    physical_derivatives,
    template_builder,
)
from ._measures import (
    CONSTRAINT_NAMES,
    MIN_BRIDGE,
    constraint_values,
    geometric_constraints,
    magnet_area,
    magnet_area_and_gradient,
    smoothness_and_gradient,
)
from ._offsets import MAX_OFFSET, ControlPointOffsets, apply_offsets
from ._parameters import FIXED_PARAMETERS, FREE_PARAMETERS, DesignSpace, DesignVector, ParameterSet, ParameterSpec
from ._template import STATOR_SLOTS, WINDING, MachineTemplate, RotorLayout, TemplateResolution, build_geometry, rotor_layout

__all__ = [
    "FREE_PARAMETERS",
    "FIXED_PARAMETERS",
    "ParameterSpec",
    "ParameterSet",
    "DesignSpace",
    "DesignVector",
    "TemplateResolution",
    "RotorLayout",
    "MachineTemplate",
    "rotor_layout",
    "build_geometry",
    "STATOR_SLOTS",
    "WINDING",
    "MAX_OFFSET",
    "ControlPointOffsets",
    "apply_offsets",
    "GeometryBuilder",
    "template_builder",
    "control_point_jacobian",
    "parameter_jacobian",
    "offset_jacobian",
    "PhysicalDerivatives",
    "physical_derivatives",
    "MIN_BRIDGE",
    "CONSTRAINT_NAMES",
    "constraint_values",
    "geometric_constraints",
    "magnet_area",
    "magnet_area_and_gradient",
    "smoothness_and_gradient",
]
