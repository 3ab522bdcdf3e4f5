"""The coupled rotor-stator saddle point system"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray, IntArray
from isomotor.materials import MaterialLibrary
from isomotor.splines import MultiPatchGeometry

from ._coupling import assemble_coupling, harmonic_set, rotation_matrix
from ._dofs import DofMap
from ._quadrature import QuadratureRule
from ._sources import ExcitationState, coil_areas, point_rhs
from ._stiffness import point_stiffness, quadrature_rules

__all__ = ["AssembledSystem", "SystemBuilder", "max_admissible_harmonic"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssembledSystem:
    """Blocks of the saddle point system at one rotor angle

    [[K_rt, 0, -G_rt], [0, K_st, G_st R], [-G_rt^T, (G_st R)^T, 0]] (u_rt, u_st, lambda) = (b_rt, b_st, 0)
    """

    K_rt: sparse.csr_matrix
    K_st: sparse.csr_matrix
    b_rt: FloatArray
    b_st: FloatArray
    G_rt: sparse.csr_matrix
    G_st: sparse.csr_matrix
    harmonics: IntArray
    beta: float

    def rotation(self, derivative: bool = False) -> sparse.csr_matrix:
        """R_beta or dR/dbeta"""
        return rotation_matrix(self.beta, self.harmonics, derivative)

    def matrix(self) -> sparse.csc_matrix:
        """Full saddle point matrix"""
        coupled = self.G_st @ self.rotation()
        return sparse.bmat(
            [
                [self.K_rt, None, -self.G_rt],
                [None, self.K_st, coupled],
                [-self.G_rt.T, coupled.T, None],
            ],
            format="csc",
        )

    def rhs(self) -> FloatArray:
        """(b_rt, b_st, 0)"""
        return np.concatenate([self.b_rt, self.b_st, np.zeros(self.G_rt.shape[1])])


def max_admissible_harmonic(geometry: MultiPatchGeometry, dofs: Optional[DofMap] = None, cap: int = 102) -> int:
    """Largest harmonic order whose coupling columns do not outnumber either airgap trace"""
    dofs = dofs or DofMap(geometry)
    traces = min(dofs.trace_count(geometry, "rotor"), dofs.trace_count(geometry, "stator"))
    orders = harmonic_set(cap, geometry.period)
    admissible = orders[: traces // 2]
    if admissible.size == 0:
        raise ConfigError("the airgap traces are too coarse for a single harmonic")
    return int(admissible[-1])


class SystemBuilder:
    """Assembles the coupled system of one geometry for any iterate and angle

    Quadrature data, the unknown numbering, coil areas and the coupling
    matrices are computed once; only the stiffness (through nu) and the
    angle dependent parts change between calls.
    """

    def __init__(
        self,
        geometry: MultiPatchGeometry,
        materials: MaterialLibrary,
        excitation: Optional[ExcitationState] = None,
        length: float = 1.0,
        harmonics: Optional[IntArray] = None,
        extra_quadrature: Optional[int] = None,
        rules: Optional[List[QuadratureRule]] = None,
        dofs: Optional[DofMap] = None,
    ):
        """System builder

        Parameters
        ----------
        geometry : MultiPatchGeometry
            quarter machine or any geometry with airgap tags on both sides
        materials : MaterialLibrary
            reluctivity models by material name
        excitation : Optional[ExcitationState], optional
            supply, by default ExcitationState()
        length : float, optional
            axial length in meters, by default 1.0
        harmonics : Optional[IntArray], optional
            harmonic orders, by default 2, 6, ... up to the settings cap
        extra_quadrature : Optional[int], optional
            additional Gauss points per direction, by default from the settings
        rules, dofs : optional
            cached topology data of an earlier builder on the same topology

        Raises
        ------
        ConfigError
            if there are more coupling columns than airgap trace unknowns
        """
        if not length > 0:
            raise ConfigError(f"axial length must be positive, got {length}")
        self.geometry = geometry
        self.materials = materials
        self.excitation = excitation or ExcitationState()
        self.length = float(length)
        self.extra_quadrature = extra_quadrature
        self.harmonics = harmonic_set(period=geometry.period) if harmonics is None else np.asarray(harmonics)
        self.rules = rules or quadrature_rules(geometry, extra_quadrature)
        self.dofs = dofs or DofMap(geometry)
        for side in ("rotor", "stator"):
            traces = self.dofs.trace_count(geometry, side)  # type: ignore
            if 2 * self.harmonics.size > traces:
                raise ConfigError(
                    f"{2 * self.harmonics.size} coupling columns exceed the {traces} {side} airgap unknowns, "
                    f"lower the harmonic cap to at most {max_admissible_harmonic(geometry, self.dofs)}"
                )
        self.G_rt = assemble_coupling(geometry, "rotor", self.harmonics, self.dofs, extra_quadrature)
        self.G_st = assemble_coupling(geometry, "stator", self.harmonics, self.dofs, extra_quadrature)
        self.coil_areas: Dict[int, float] = coil_areas(geometry, self.rules)
        self._point_rhs: Dict[Tuple[float, float], FloatArray] = {}
        logger.debug(
            "System | rotor: %d | stator: %d | multipliers: %d",
            self.dofs.n_rotor,
            self.dofs.n_stator,
            self.n_multipliers,
        )

    def __repr__(self) -> str:
        return f"SystemBuilder(size={self.size}, harmonics={self.harmonics.size})"

    def with_geometry(self, geometry: MultiPatchGeometry) -> SystemBuilder:
        """Builder for moved control points on the same topology"""
        return SystemBuilder(
            geometry,
            self.materials,
            self.excitation,
            self.length,
            self.harmonics,
            self.extra_quadrature,
            self.rules,
            self.dofs,
        )

    @property
    def n_multipliers(self) -> int:
        """Number of mortar multipliers"""
        return 2 * int(self.harmonics.size)

    @property
    def size(self) -> int:
        """Length of (u_rt, u_st, lambda)"""
        return self.dofs.size + self.n_multipliers

    @property
    def is_linear(self) -> bool:
        """True when every material present in the geometry is linear"""
        return all(self.materials[record.material].is_linear for record in self.geometry.records)

    def split(self, state: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """(u_rt, u_st, lambda) views of a full state vector"""
        n_rt, n_dofs = self.dofs.n_rotor, self.dofs.size
        return state[:n_rt], state[n_rt:n_dofs], state[n_dofs:]

    def point_values(self, state: FloatArray) -> FloatArray:
        """A_z coefficients at every control point"""
        return self.dofs.to_points(state[: self.dofs.size])

    def stiffness(self, state: Optional[FloatArray] = None, newton: bool = False) -> sparse.csr_matrix:
        """Reduced K(u), or the Newton Jacobian block with `newton`"""
        u_points = None if state is None else self.point_values(state)
        return self.dofs.reduce(point_stiffness(self.geometry, self.materials, u_points, self.rules, newton))

    def excitation_at(self, beta: float) -> ExcitationState:
        """Supply state at a rotor angle"""
        return self.excitation.at(beta)

    def source(self, beta: float) -> FloatArray:
        """Right-hand side (b_rt, b_st, 0) at a rotor angle"""
        excitation = self.excitation_at(beta)
        key = (excitation.beta, excitation.phi0)
        if key not in self._point_rhs:
            self._point_rhs[key] = point_rhs(self.geometry, excitation, self.materials, self.rules, self.coil_areas)
        b = self.dofs.restrict(self._point_rhs[key])
        return np.concatenate([b, np.zeros(self.n_multipliers)])

    def coupling(self, beta: float) -> sparse.csc_matrix:
        """Angle dependent off-diagonal blocks of the saddle point matrix"""
        n_rt, n_st = self.dofs.n_rotor, self.dofs.n_stator
        coupled = self.G_st @ rotation_matrix(beta, self.harmonics)
        return sparse.bmat(
            [
                [sparse.csr_matrix((n_rt, n_rt)), None, -self.G_rt],
                [None, sparse.csr_matrix((n_st, n_st)), coupled],
                [-self.G_rt.T, coupled.T, sparse.csr_matrix((self.n_multipliers, self.n_multipliers))],
            ],
            format="csc",
        )

    def _padded(self, block: sparse.spmatrix) -> sparse.csc_matrix:
        return sparse.block_diag([block, sparse.csr_matrix((self.n_multipliers, self.n_multipliers))], format="csc")

    def residual(self, state: FloatArray, beta: float, coupling: Optional[sparse.spmatrix] = None) -> FloatArray:
        """A(u) U - F with nu evaluated at U"""
        coupling = self.coupling(beta) if coupling is None else coupling
        stiffness = self.stiffness(state)
        n_dofs = self.dofs.size
        result = coupling @ state - self.source(beta)
        result[:n_dofs] += stiffness @ state[:n_dofs]
        return result

    def jacobian(self, state: FloatArray, beta: float, coupling: Optional[sparse.spmatrix] = None) -> sparse.csc_matrix:
        """d residual / d U"""
        coupling = self.coupling(beta) if coupling is None else coupling
        return (self._padded(self.stiffness(state, newton=True)) + coupling).tocsc()

    def assemble(self, beta: float, state: Optional[FloatArray] = None) -> AssembledSystem:
        """All blocks at an angle with nu evaluated at `state` (zero by default)"""
        stiffness = self.stiffness(state)
        b = self.source(beta)
        rotor, stator = self.dofs.side_slice("rotor"), self.dofs.side_slice("stator")
        return AssembledSystem(
            K_rt=stiffness[rotor][:, rotor],
            K_st=stiffness[stator][:, stator],
            b_rt=b[rotor],
            b_st=b[stator],
            G_rt=self.G_rt,
            G_st=self.G_st,
            harmonics=self.harmonics,
            beta=float(beta),
        )
