"""Geometric constraints, magnet area and the offset smoothness regularizer"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from isomotor._settings import settings
from isomotor.common.exceptions import DomainError
from isomotor.common.types import FloatArray

from ._parameters import FREE_PARAMETERS, DesignVector, ParameterSet
from ._template import MachineTemplate, rotor_layout

__all__ = [
    "MIN_BRIDGE",
    "CONSTRAINT_NAMES",
    "constraint_values",
    "geometric_constraints",
    "magnet_area",
    "magnet_area_and_gradient",
    "smoothness_and_gradient",
]

logger = logging.getLogger(__name__)

MIN_BRIDGE = 1.5e-3

CONSTRAINT_NAMES = (
    "outer_slit_to_relief",
    "outer_rib_to_surface",
    "magnet_to_surface",
    "upper_slit_to_cut",
    "lower_slit_to_cut",
    "post_to_bore",
    "magnet_inner_to_bore",
    "magnet_outer_to_bore",
    "post_to_surface",
)


def constraint_values(params: ParameterSet, template: MachineTemplate) -> FloatArray:
    """Nine bridge thickness shortfalls 1.5 mm - clearance, feasible when <= 0

    Bounds are not checked, so perturbed designs just outside the box evaluate too.
    """
    layout = rotor_layout(params)
    lower, upper = layout.lower, layout.upper
    radius = layout.rotor_radius
    bore = layout.bore_radius

    # relief chord from the relief base to the first surface vertex
    base = layout.relief_base
    surface = radius * np.array([np.cos(template.surface_angle(1)), np.sin(template.surface_angle(1))])
    chord = surface - base
    normal = np.array([chord[1], -chord[0]]) / np.linalg.norm(chord)
    if normal @ base < 0:
        normal = -normal

    clearances = np.array(
        [
            normal @ (base - upper[1]),
            radius - np.linalg.norm(upper[2]),
            radius - np.linalg.norm(upper[3]),
            upper[1, 1],
            lower[1, 1],
            np.linalg.norm(lower[6]) - bore,
            np.linalg.norm(lower[4]) - bore,
            np.linalg.norm(lower[3]) - bore,
            radius - np.linalg.norm(upper[6]),
        ]
    )
    return MIN_BRIDGE - clearances


def geometric_constraints(
    x: DesignVector, template: MachineTemplate, step: Optional[float] = None
) -> Tuple[FloatArray, FloatArray]:
    """Constraint values and their central difference gradient in scaled coordinates

    Returns
    -------
    Tuple[FloatArray, FloatArray]
        g of shape (9,) in meters and dg/dx of shape (9, d); offset columns are zero
    """
    step = settings.constraint_fd_step if step is None else step
    space = x.space
    values = constraint_values(x.parameters, template)
    gradient = np.zeros((values.size, space.size))
    for index in range(space.n_parameters):
        shifted = []
        for sign in (1.0, -1.0):
            perturbed = np.array(x.x)
            perturbed[index] += sign * step
            shifted.append(constraint_values(space.parameters_from(perturbed), template))
        gradient[:, index] = (shifted[0] - shifted[1]) / (2.0 * step)
    return values, gradient


def magnet_area(params: ParameterSet) -> float:
    """Magnet cross section of one pole, 2 MW1 WMAG in square meters"""
    return 2.0 * params.si("MW1") * params.si("WMAG")


def magnet_area_and_gradient(x: DesignVector) -> Tuple[float, FloatArray]:
    """Magnet area and its exact gradient in scaled coordinates"""
    params = x.parameters
    space = x.space
    gradient = np.zeros(space.size)
    gradient[FREE_PARAMETERS.index("MW1")] = 2.0 * params.si("WMAG")
    gradient[FREE_PARAMETERS.index("WMAG")] = 2.0 * params.si("MW1")
    return magnet_area(params), gradient * space.ranges


def smoothness_and_gradient(offsets: FloatArray, angles: FloatArray) -> Tuple[float, FloatArray]:
    """S = sum_i (dC_{i+1} - dC_i)^2 / (theta_{i+1} - theta_i) and dS/d(dC)

    Parameters
    ----------
    offsets : FloatArray
        physical offsets in meters ordered by polar angle
    angles : FloatArray
        strictly increasing polar angles in radians

    Raises
    ------
    DomainError
        if the angles are not strictly increasing
    """
    offsets = np.asarray(offsets, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if offsets.shape != angles.shape:
        raise ValueError("offsets and angles must have the same shape")
    spacing = np.diff(angles)
    if np.any(spacing <= 0.0):
        raise DomainError("smoothing angles must be strictly increasing")
    ratio = np.diff(offsets) / spacing
    value = float(np.sum(ratio * np.diff(offsets)))
    gradient = np.zeros_like(offsets)
    gradient[1:] += 2.0 * ratio
    gradient[:-1] -= 2.0 * ratio
    return value, gradient
