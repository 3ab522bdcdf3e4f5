"""Chain rule from control points to parameters, design coordinates and torque statistics"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from isomotor._settings import settings
from isomotor.assembly import SystemBuilder
from isomotor.common.exceptions import ContractError
from isomotor.common.types import FloatArray
from isomotor.geometry import DesignSpace, PhysicalDerivatives
from isomotor.solver import FieldSolution, SweepResult, TorqueProfile

from ._adjoint import AdjointSolution, solve_adjoint
from ._shape import dT_dC, dT_dmagnet_angle, dT_dphase

__all__ = [
    "RIPPLE_FLOOR",
    "dT_dP",
    "design_gradient",
    "torque_stats_gradient",
    "AngleSensitivity",
    "SensitivityBundle",
    "angle_sensitivity",
    "sweep_sensitivities",
]

logger = logging.getLogger(__name__)

# ripple below this fraction of the largest torque counts as a flat profile
RIPPLE_FLOOR = 1e-14


def dT_dP(
    dtdc: FloatArray,
    dcdp: sparse.spmatrix,
    physical: PhysicalDerivatives,
    magnet_terms: Dict[int, float],
    phase_term: float,
) -> FloatArray:
    """dT/dP per free parameter in SI units, D_geo + D_phys

    Parameters
    ----------
    dtdc : FloatArray
        flat dT/dC over all control point coordinates
    dcdp : sparse.spmatrix
        dC/dP of shape (2 n_points, 17)
    physical : PhysicalDerivatives
        d alpha / dP per magnet patch and d phi0 / dP
    magnet_terms : Dict[int, float]
        dT/d alpha per magnet patch
    phase_term : float
        dT/d phi0

    Returns
    -------
    FloatArray
        shape (17,)
    """
    if dcdp.shape[0] != dtdc.size:
        raise ContractError(f"dC/dP has {dcdp.shape[0]} rows but dT/dC has {dtdc.size} entries")
    result = np.asarray(dcdp.T @ dtdc, dtype=float).ravel()
    for patch, rate in physical.magnet_angle.items():
        result += magnet_terms.get(patch, 0.0) * rate
    result += phase_term * physical.phase
    return result


def design_gradient(
    dtdp: FloatArray, dtdc: FloatArray, offset_jacobian: Optional[sparse.spmatrix], space: DesignSpace
) -> FloatArray:
    """dT/dx on the unit box, parameters then offset design values"""
    gradient = np.zeros(space.size)
    gradient[space.parameter_slice()] = dtdp
    if space.n_offsets:
        if offset_jacobian is None:
            raise ContractError("a design space with offsets needs the offset Jacobian")
        gradient[space.offset_slice()] = np.asarray(offset_jacobian.T @ dtdc).ravel()
    return gradient * space.ranges


def torque_stats_gradient(profile: TorqueProfile, gradients: FloatArray) -> Tuple[FloatArray, FloatArray, bool]:
    """Gradients of the mean torque and of the ripple

    dT_mean = mean_b g_b and dT_std = (mean_b T_b g_b - T_mean dT_mean) / T_std.

    Parameters
    ----------
    profile : TorqueProfile
        torques at N angles
    gradients : FloatArray
        per-angle gradients, shape (N, d) or (N,)

    Returns
    -------
    Tuple[FloatArray, FloatArray, bool]
        mean gradient, ripple gradient and whether the profile is flat; a flat
        profile reports the zero subgradient for the ripple
    """
    gradients = np.asarray(gradients, dtype=float)
    torques = np.asarray(profile.torques, dtype=float)
    if gradients.shape[0] != torques.size:
        raise ContractError(f"{gradients.shape[0]} gradients for {torques.size} torques")
    mean_gradient = np.mean(gradients, axis=0)
    ripple = profile.std
    scale = max(float(np.max(np.abs(torques))), np.finfo(float).tiny)
    if ripple <= RIPPLE_FLOOR * scale:
        logger.warning("Ripple | flat torque profile, reporting a zero ripple gradient")
        return mean_gradient, np.zeros_like(mean_gradient), True
    weighted = np.tensordot(torques, gradients, axes=(0, 0)) / torques.size
    return mean_gradient, (weighted - profile.mean * mean_gradient) / ripple, False


@dataclass(frozen=True)
class AngleSensitivity:
    """Derivatives of the torque at one rotor angle"""

    beta: float
    torque: float
    adjoint: AdjointSolution
    dT_dC: FloatArray
    dT_dP: FloatArray
    magnet_terms: Dict[int, float]
    phase_term: float
    dT_dx: FloatArray


@dataclass(frozen=True)
class SensitivityBundle:
    """Per-angle sensitivities of a sweep with the torque statistics gradients"""

    profile: TorqueProfile
    angles: Tuple[AngleSensitivity, ...]
    mean_gradient: FloatArray
    std_gradient: FloatArray
    flat_profile: bool

    @property
    def gradients(self) -> FloatArray:
        """dT_b/dx stacked by angle, shape (N, d)"""
        return np.stack([entry.dT_dx for entry in self.angles])

    @property
    def adjoints(self) -> List[AdjointSolution]:
        """gamma per angle"""
        return [entry.adjoint for entry in self.angles]


def angle_sensitivity(
    builder: SystemBuilder,
    solution: FieldSolution,
    torque_value: float,
    dcdp: sparse.spmatrix,
    physical: PhysicalDerivatives,
    space: DesignSpace,
    offset_jacobian: Optional[sparse.spmatrix] = None,
) -> AngleSensitivity:
    """Adjoint solve and the full chain at one angle"""
    adjoint = solve_adjoint(builder, solution)
    if np.any(adjoint.gamma):
        dtdc = dT_dC(builder, solution, adjoint)
        magnet_terms = dT_dmagnet_angle(builder, solution, adjoint)
        phase_term = dT_dphase(builder, solution, adjoint)
    else:
        dtdc = np.zeros(2 * builder.geometry.n_points)
        magnet_terms, phase_term = {}, 0.0
    dtdp = dT_dP(dtdc, dcdp, physical, magnet_terms, phase_term)
    dtdx = design_gradient(dtdp, dtdc, offset_jacobian, space)
    logger.debug("Sensitivity | beta: %.4f deg | |dT/dx|: %.3e", np.rad2deg(solution.beta), np.linalg.norm(dtdx))
    return AngleSensitivity(solution.beta, torque_value, adjoint, dtdc, dtdp, magnet_terms, phase_term, dtdx)


def sweep_sensitivities(
    builder: SystemBuilder,
    result: SweepResult,
    dcdp: sparse.spmatrix,
    physical: PhysicalDerivatives,
    space: DesignSpace,
    offset_jacobian: Optional[sparse.spmatrix] = None,
    threads: Optional[int] = None,
) -> SensitivityBundle:
    """Sensitivities at every angle of a sweep, gathered in angle order"""
    threads = settings.threads if threads is None else threads
    profile = result.profile

    def one(index: int) -> AngleSensitivity:
        return angle_sensitivity(
            builder, result.solutions[index], float(profile.torques[index]), dcdp, physical, space, offset_jacobian
        )

    indices = range(len(result.solutions))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = tuple(pool.map(one, indices))
    else:
        entries = tuple(one(index) for index in indices)
    gradients = np.stack([entry.dT_dx for entry in entries])
    mean_gradient, std_gradient, flat = torque_stats_gradient(profile, gradients)
    return SensitivityBundle(profile, entries, mean_gradient, std_gradient, flat)
