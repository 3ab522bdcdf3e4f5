"""Magnet and coil right-hand sides"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray
from isomotor.materials import MaterialLibrary
from isomotor.splines import ExcitationSpec, MagnetSpec, MultiPatchGeometry

from ._dofs import DofMap
from ._quadrature import QuadratureRule, kinematics
from ._stiffness import quadrature_rules

__all__ = ["ExcitationState", "coil_areas", "point_rhs", "assemble_rhs"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExcitationState:
    """Rotation angle and three-phase supply

    Phase k carries I sin(p beta + phi0 + 2 pi k / 3); a coil of n turns spreads it
    uniformly over its cross section, measured from the geometry unless
    `coil_area` overrides it.
    """

    beta: float = 0.0
    phi0: float = 0.0
    current: float = 3.0
    turns: int = 35
    pole_pairs: int = 2
    coil_area: Optional[float] = None

    def __post_init__(self):
        if self.pole_pairs < 1:
            raise ConfigError(f"pole pair count must be at least 1, got {self.pole_pairs}")
        if self.coil_area is not None and not self.coil_area > 0:
            raise ConfigError(f"coil area must be positive, got {self.coil_area}")

    def at(self, beta: float) -> ExcitationState:
        """Same supply at another rotor angle"""
        return replace(self, beta=float(beta))

    def electric_angle(self, phase: int) -> float:
        """p beta + phi0 + 2 pi k / 3"""
        return self.pole_pairs * self.beta + self.phi0 + 2.0 * np.pi * phase / 3.0

    def current_density(self, spec: ExcitationSpec, area: float) -> float:
        """J_z of a coil in A/m^2"""
        area = self.coil_area if self.coil_area is not None else area
        if not area > 0:
            raise ConfigError(f"coil {spec.coil} has a non-positive area {area}")
        return self.current * self.turns / area * spec.sign * np.sin(self.electric_angle(spec.phase))

    def current_density_rate(self, spec: ExcitationSpec, area: float) -> float:
        """dJ_z / d(electric angle)"""
        area = self.coil_area if self.coil_area is not None else area
        return self.current * self.turns / area * spec.sign * np.cos(self.electric_angle(spec.phase))


def coil_areas(geometry: MultiPatchGeometry, rules: Optional[Sequence[QuadratureRule]] = None) -> Dict[int, float]:
    """Cross section of every coil in square meters"""
    rules = rules or quadrature_rules(geometry)
    areas: Dict[int, float] = {}
    for record, rule in zip(geometry.records, rules):
        if isinstance(record.region, ExcitationSpec):
            kin = kinematics(rule, record.patch.control_points, record.label)
            areas[record.region.coil] = areas.get(record.region.coil, 0.0) + float(kin.measure.sum())
    return areas


def point_rhs(
    geometry: MultiPatchGeometry,
    excitation: ExcitationState,
    materials: MaterialLibrary,
    rules: Optional[Sequence[QuadratureRule]] = None,
    areas: Optional[Dict[int, float]] = None,
) -> FloatArray:
    """Source vector over all control points before elimination

    Magnets contribute int nu grad N_i . B_r (-sin a, cos a) and coils int J N_i.

    Raises
    ------
    ConfigError
        if a magnet is not made of a linear material or a coil area is not positive
    """
    rules = rules or quadrature_rules(geometry)
    areas = coil_areas(geometry, rules) if areas is None else areas
    b = np.zeros(geometry.n_points)
    for record, rule, patch_ids in zip(geometry.records, rules, geometry.global_ids):
        region = record.region
        if region is None:
            continue
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = patch_ids.ravel()[rule.indices]
        if isinstance(region, MagnetSpec):
            model = materials[record.material]
            if not model.is_linear:
                raise ConfigError(f"magnet patch '{record.label}' needs a linear material")
            nu = model.nu(np.zeros(1))[0]
            local = nu * np.einsum("qka,a->qk", kin.grad, region.perpendicular()) * kin.measure[:, None]
        elif isinstance(region, ExcitationSpec):
            density = excitation.current_density(region, areas[region.coil])
            local = density * rule.values * kin.measure[:, None]
        else:
            continue
        np.add.at(b, ids.ravel(), local.ravel())
    return b


def assemble_rhs(
    geometry: MultiPatchGeometry,
    excitation: ExcitationState,
    materials: MaterialLibrary,
    dofs: Optional[DofMap] = None,
    rules: Optional[Sequence[QuadratureRule]] = None,
) -> Tuple[FloatArray, FloatArray]:
    """Reduced rotor and stator right-hand sides (b_rt, b_st)"""
    dofs = dofs or DofMap(geometry)
    b = dofs.restrict(point_rhs(geometry, excitation, materials, rules))
    return b[dofs.side_slice("rotor")], b[dofs.side_slice("stator")]
