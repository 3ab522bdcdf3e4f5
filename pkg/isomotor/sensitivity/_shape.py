"""Control point derivatives of the torque and the physical source terms"""

from __future__ import annotations

import logging
from typing import Dict

import numpy as np

from isomotor.assembly import FIELD_FLOOR, SystemBuilder, kinematics, potential_gradient
from isomotor.common.exceptions import ContractError
from isomotor.common.types import FloatArray
from isomotor.solver import FieldSolution
from isomotor.splines import ExcitationSpec, MagnetSpec

from ._adjoint import AdjointSolution

__all__ = ["dT_dC", "dT_dmagnet_angle", "dT_dphase", "check_pairing"]

logger = logging.getLogger(__name__)


def check_pairing(solution: FieldSolution, adjoint: AdjointSolution) -> None:
    """Forward and adjoint data must come from the same rotor angle

    Raises
    ------
    ContractError
        on mismatched angles or sizes
    """
    if solution.beta != adjoint.beta or solution.state.shape != adjoint.gamma.shape:
        raise ContractError(
            f"forward solution at beta = {solution.beta} paired with adjoint at beta = {adjoint.beta}"
        )


def dT_dC(builder: SystemBuilder, solution: FieldSolution, adjoint: AdjointSolution) -> FloatArray:
    """dT/dC over every control point coordinate, flattened as [x_0, y_0, x_1, y_1, ...]

    dT/dC = gamma^T (dK/dC u - db/dC) with the stiffness term of the nonlinear
    reluctivity, the magnet pullback, the coil integral and the coil area
    dependence of the current density. Coupling matrices are held fixed, so
    airgap trace points only see the volume terms of their patches.

    Raises
    ------
    ContractError
        if the adjoint belongs to another angle
    """
    check_pairing(solution, adjoint)
    geometry = builder.geometry
    u_points = builder.point_values(np.asarray(solution.state))
    g_points = builder.dofs.to_points(adjoint.unknowns)
    excitation = builder.excitation_at(solution.beta)
    result = np.zeros((geometry.n_points, 2))
    area_rates: Dict[int, np.ndarray] = {}
    coil_pairings: Dict[int, float] = {}

    for record, rule, patch_ids in zip(geometry.records, builder.rules, geometry.global_ids):
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = patch_ids.ravel()[rule.indices]
        grad_a = potential_gradient(kin.grad, ids, u_points)
        grad_g = potential_gradient(kin.grad, ids, g_points)
        model = builder.materials[record.material]
        flux = np.linalg.norm(grad_a, axis=1)
        nu = model.nu(flux)
        w = kin.measure

        pairing = np.einsum("qa,qa->q", grad_g, grad_a)
        along_a = np.einsum("qka,qa->qk", kin.grad, grad_a)
        along_g = np.einsum("qka,qa->qk", kin.grad, grad_g)
        local = (nu * w)[:, None, None] * (
            pairing[:, None, None] * kin.grad
            - along_a[:, :, None] * grad_g[:, None, :]
            - along_g[:, :, None] * grad_a[:, None, :]
        )
        if not model.is_linear:
            safe = np.where(flux > FIELD_FLOOR, flux, 1.0)
            slope = np.where(flux > FIELD_FLOOR, model.dnu_dB(flux) / safe, 0.0)
            local -= (slope * w * pairing)[:, None, None] * along_a[:, :, None] * grad_a[:, None, :]

        region = record.region
        if isinstance(region, MagnetSpec):
            direction = region.perpendicular()
            g_dot_m = grad_g @ direction
            along_m = np.einsum("qka,a->qk", kin.grad, direction)
            local -= (nu * w)[:, None, None] * (
                g_dot_m[:, None, None] * kin.grad - along_m[:, :, None] * grad_g[:, None, :]
            )
        elif isinstance(region, ExcitationSpec):
            area = builder.coil_areas[region.coil]
            density = excitation.current_density(region, area)
            trace = np.einsum("qk,qk->q", rule.values, g_points[ids])
            local -= (density * trace * w)[:, None, None] * kin.grad
            if excitation.coil_area is None:
                rate = np.zeros((geometry.n_points, 2))
                np.add.at(rate, ids.ravel(), (w[:, None, None] * kin.grad).reshape(-1, 2))
                area_rates[region.coil] = area_rates.get(region.coil, 0.0) + rate
                coil_pairings[region.coil] = coil_pairings.get(region.coil, 0.0) + density * float(trace @ w)

        np.add.at(result, ids.ravel(), local.reshape(-1, 2))

    # J = I n / A: d(gamma^T b)/dC gains -(J / A) (int gamma) dA/dC
    for coil, rate in area_rates.items():
        result += coil_pairings[coil] / builder.coil_areas[coil] * rate
    return result.ravel()


def dT_dmagnet_angle(builder: SystemBuilder, solution: FieldSolution, adjoint: AdjointSolution) -> Dict[int, float]:
    """dT/d alpha per magnet patch, -gamma^T db/d alpha"""
    check_pairing(solution, adjoint)
    geometry = builder.geometry
    g_points = builder.dofs.to_points(adjoint.unknowns)
    derivatives: Dict[int, float] = {}
    for index, (record, rule, patch_ids) in enumerate(zip(geometry.records, builder.rules, geometry.global_ids)):
        region = record.region
        if not isinstance(region, MagnetSpec):
            continue
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = patch_ids.ravel()[rule.indices]
        grad_g = potential_gradient(kin.grad, ids, g_points)
        nu = builder.materials[record.material].nu(np.zeros(1))[0]
        turned = region.remanence * np.array([-np.cos(region.angle), -np.sin(region.angle)])
        derivatives[index] = -float(nu * np.sum((grad_g @ turned) * kin.measure))
    return derivatives


def dT_dphase(builder: SystemBuilder, solution: FieldSolution, adjoint: AdjointSolution) -> float:
    """dT/d phi0, -gamma^T db/d phi0"""
    check_pairing(solution, adjoint)
    geometry = builder.geometry
    g_points = builder.dofs.to_points(adjoint.unknowns)
    excitation = builder.excitation_at(solution.beta)
    total = 0.0
    for record, rule, patch_ids in zip(geometry.records, builder.rules, geometry.global_ids):
        region = record.region
        if not isinstance(region, ExcitationSpec):
            continue
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = patch_ids.ravel()[rule.indices]
        trace = np.einsum("qk,qk->q", rule.values, g_points[ids])
        rate = excitation.current_density_rate(region, builder.coil_areas[region.coil])
        total -= rate * float(trace @ kin.measure)
    return total
