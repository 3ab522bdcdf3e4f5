"""Control point sensitivities dC/dP by rebuilding perturbed geometries"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from scipy import sparse

from isomotor._settings import settings
from isomotor.common.types import FloatArray
from isomotor.splines import MultiPatchGeometry

from ._offsets import ControlPointOffsets, apply_offsets
from ._parameters import FREE_PARAMETERS, ParameterSet
from ._template import MachineTemplate

__all__ = [
    "PRUNE_TOLERANCE",
    "GeometryBuilder",
    "template_builder",
    "control_point_jacobian",
    "parameter_jacobian",
    "offset_jacobian",
    "PhysicalDerivatives",
    "physical_derivatives",
]

logger = logging.getLogger(__name__)

PRUNE_TOLERANCE = 1e-12

GeometryBuilder = Callable[[ParameterSet], MultiPatchGeometry]


def template_builder(
    template: MachineTemplate, offsets: Optional[FloatArray] = None, layout: Optional[ControlPointOffsets] = None
) -> GeometryBuilder:
    """Builder of the offset geometry for fixed physical offsets"""

    def build(params: ParameterSet) -> MultiPatchGeometry:
        geometry = template.build(params)
        if offsets is None:
            return geometry
        return apply_offsets(geometry, offsets, layout)

    return build


def control_point_jacobian(
    params: ParameterSet,
    index: int,
    builder: GeometryBuilder,
    step: Optional[float] = None,
    reference: Optional[MultiPatchGeometry] = None,
) -> sparse.csc_matrix:
    """Forward difference of every control point with respect to one free parameter

    The derivative is taken in SI units (meters per meter or meters per radian)
    and flattened as [x_0, y_0, x_1, y_1, ...] over the global numbering.

    Parameters
    ----------
    params : ParameterSet
        expansion point
    index : int
        position of the parameter in FREE_PARAMETERS
    builder : GeometryBuilder
        parameters to geometry, the topology must not depend on the parameters
    step : Optional[float], optional
        SI step, by default the relative step of the settings times the range
    reference : Optional[MultiPatchGeometry], optional
        geometry at `params` when already built

    Returns
    -------
    sparse.csc_matrix
        column of shape (2 n_points, 1), entries below 1e-12 pruned

    Raises
    ------
    GeometryError
        if the perturbed geometry cannot be built
    """
    name = FREE_PARAMETERS[index]
    lower, upper = params.bounds_si()
    value = params.si(name)
    if step is None:
        step = settings.dcdp_relative_step * (upper[index] - lower[index])
    # backward step at the upper bound
    if value + step > upper[index]:
        step = -step
    reference = reference or builder(params)
    perturbed = builder(params.with_si_values({name: value + step}))
    derivative = ((perturbed.control_points() - reference.control_points()) / step).ravel()
    derivative[np.abs(derivative) < PRUNE_TOLERANCE] = 0.0
    return sparse.csc_matrix(derivative[:, None])


def parameter_jacobian(
    params: ParameterSet,
    builder: GeometryBuilder,
    reference: Optional[MultiPatchGeometry] = None,
    relative_step: Optional[float] = None,
) -> sparse.csc_matrix:
    """dC/dP for all free parameters, shape (2 n_points, 17) in SI units

    OPERATING_ANGLE never moves a control point and yields an empty column.
    """
    reference = reference or builder(params)
    relative_step = settings.dcdp_relative_step if relative_step is None else relative_step
    lower, upper = params.bounds_si()
    columns = []
    for index, name in enumerate(FREE_PARAMETERS):
        if name == "OPERATING_ANGLE":
            columns.append(sparse.csc_matrix((2 * reference.n_points, 1)))
            continue
        step = relative_step * (upper[index] - lower[index])
        columns.append(control_point_jacobian(params, index, builder, step, reference))
    jacobian = sparse.hstack(columns, format="csc")
    logger.debug("dC/dP | shape: %s | nonzeros: %d", jacobian.shape, jacobian.nnz)
    return jacobian


def offset_jacobian(geometry: MultiPatchGeometry, layout: ControlPointOffsets) -> sparse.csr_matrix:
    """dC/d(design offsets), shape (2 n_points, n_design)

    Each physical offset moves its point along the radial unit vector of the
    unperturbed geometry passed in.
    """
    points = geometry.control_points()[layout.ids]
    radial = points / np.linalg.norm(points, axis=1)[:, None]
    rows = np.concatenate([2 * layout.ids, 2 * layout.ids + 1])
    cols = np.concatenate([layout.design_index, layout.design_index])
    data = np.concatenate([radial[:, 0], radial[:, 1]])
    return sparse.csr_matrix((data, (rows, cols)), shape=(2 * geometry.n_points, layout.n_design))


@dataclass(frozen=True)
class PhysicalDerivatives:
    """Derivatives of non-geometric inputs with respect to the free parameters (SI)

    `magnet_angle` maps a magnet patch index to d alpha / dP and `phase` is
    d phi0 / dP.
    """

    magnet_angle: Dict[int, FloatArray]
    phase: FloatArray


def physical_derivatives(geometry: MultiPatchGeometry) -> PhysicalDerivatives:
    """Magnetization angle and current phase sensitivities of a template geometry"""
    ma = FREE_PARAMETERS.index("MA")
    magnet_angle = {}
    for patch, rate in geometry.metadata.get("magnet_angle_rates", {}).items():
        row = np.zeros(len(FREE_PARAMETERS))
        row[ma] = rate
        magnet_angle[int(patch)] = row
    phase = np.zeros(len(FREE_PARAMETERS))
    phase[FREE_PARAMETERS.index("OPERATING_ANGLE")] = 1.0
    return PhysicalDerivatives(magnet_angle, phase)
