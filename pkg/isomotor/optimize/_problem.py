"""Design vector to geometry, torque sweep and torque gradients"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from isomotor.assembly import ExcitationState, SystemBuilder
from isomotor.common.types import FloatArray, IntArray
from isomotor.geometry import (
    ControlPointOffsets,
    DesignSpace,
    DesignVector,
    MachineTemplate,
    ParameterSet,
    apply_offsets,
    offset_jacobian,
    parameter_jacobian,
    physical_derivatives,
    template_builder,
)
from isomotor.materials import MaterialLibrary
from isomotor.sensitivity import SensitivityBundle, sweep_sensitivities
from isomotor.solver import SweepResult, sweep
from isomotor.splines import MultiPatchGeometry

__all__ = ["DesignState", "DesignProblem"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DesignState:
    """Solved design: geometry, assembled system and the torque sweep"""

    x: DesignVector
    parameters: ParameterSet
    offsets: FloatArray
    geometry: MultiPatchGeometry
    builder: SystemBuilder
    result: SweepResult


class DesignProblem:
    """Maps design vectors to torque profiles and their design gradients

    The operating angle shifts the supply phase, phi0 = phase reference +
    OPERATING_ANGLE. Quadrature data and the unknown numbering are shared by
    every design since the template topology never changes.
    """

    def __init__(
        self,
        template: MachineTemplate,
        materials: MaterialLibrary,
        space: DesignSpace,
        layout: ControlPointOffsets,
        angles: Sequence[float],
        excitation: Optional[ExcitationState] = None,
        phase_reference: float = 0.0,
        harmonics: Optional[IntArray] = None,
        extra_quadrature: Optional[int] = None,
        threads: Optional[int] = None,
        warm_start: bool = True,
    ):
        """Design problem

        Parameters
        ----------
        template : MachineTemplate
            parametric quarter machine
        materials : MaterialLibrary
            reluctivity models
        space : DesignSpace
            design scaling, its offset count must match `layout`
        layout : ControlPointOffsets
            offset layout of the template geometry
        angles : Sequence[float]
            rotor angles in radians
        excitation : Optional[ExcitationState], optional
            supply template, beta and phi0 are overwritten per solve
        phase_reference : float, optional
            phi0 at OPERATING_ANGLE = 0 in radians, by default 0
        harmonics : Optional[IntArray], optional
            coupling harmonics, by default the assembly default
        extra_quadrature : Optional[int], optional
            additional Gauss points, by default from the settings
        threads : Optional[int], optional
            worker threads for cold sweeps and sensitivities
        warm_start : bool, optional
            start every Newton solve from the neighbouring angle, by default True
        """
        if space.n_offsets != layout.n_design:
            raise ValueError(f"design space has {space.n_offsets} offsets, the layout {layout.n_design}")
        self.template = template
        self.materials = materials
        self.space = space
        self.layout = layout
        self.angles = np.asarray(angles, dtype=float)
        self.excitation = excitation or ExcitationState()
        self.phase_reference = float(phase_reference)
        self.harmonics = harmonics
        self.extra_quadrature = extra_quadrature
        self.threads = threads
        self.warm_start = warm_start
        self._reference: Optional[SystemBuilder] = None

    def __repr__(self) -> str:
        return f"DesignProblem(size={self.space.size}, angles={self.angles.size})"

    @classmethod
    def from_template(
        cls,
        template: MachineTemplate,
        materials: MaterialLibrary,
        angles: Sequence[float],
        symmetric: bool = True,
        offset_bounds: tuple = (-1.5e-3, 0.25e-3),
        **kwargs,
    ) -> DesignProblem:
        """Problem with the offset layout and design space of the template's reference design"""
        reference = template.build(template.reference)
        layout = ControlPointOffsets.from_geometry(reference, symmetric)
        space = DesignSpace(template.reference, layout.n_design, offset_bounds)
        return cls(template, materials, space, layout, angles, **kwargs)

    def physical_offsets(self, x: DesignVector) -> FloatArray:
        """One offset per surface control point in meters"""
        return self.layout.expand(x.offsets)

    def geometry(self, x: DesignVector) -> MultiPatchGeometry:
        """Offset template geometry of a design

        Raises
        ------
        GeometryError
            if a patch inverts
        """
        return apply_offsets(self.template.build(x.parameters), self.physical_offsets(x), self.layout)

    def builder(self, geometry: MultiPatchGeometry, parameters: ParameterSet) -> SystemBuilder:
        """System builder of a design geometry"""
        excitation = replace(self.excitation, phi0=self.phase_reference + parameters.si("OPERATING_ANGLE"))
        reference = self._reference
        builder = SystemBuilder(
            geometry,
            self.materials,
            excitation,
            parameters.si("LENGTH"),
            self.harmonics if reference is None else reference.harmonics,
            self.extra_quadrature,
            None if reference is None else reference.rules,
            None if reference is None else reference.dofs,
        )
        if reference is None:
            self._reference = builder
        return builder

    def solve(
        self, x: DesignVector, initial: Optional[Sequence[Optional[FloatArray]]] = None, rtol: Optional[float] = None
    ) -> DesignState:
        """Build and sweep a design

        Raises
        ------
        GeometryError
            if the design geometry is infeasible
        SolverError
            if a Newton solve fails
        """
        parameters = x.parameters
        geometry = self.geometry(x)
        builder = self.builder(geometry, parameters)
        result = sweep(builder, self.angles, self.warm_start, initial, self.threads, rtol)
        return DesignState(x, parameters, self.physical_offsets(x), geometry, builder, result)

    def control_point_jacobian(self, state: DesignState) -> sparse.csc_matrix:
        """dC/dP at the design with its offsets held fixed"""
        build = template_builder(self.template, state.offsets, self.layout)
        return parameter_jacobian(state.parameters, build, reference=state.geometry)

    def sensitivities(self, state: DesignState, with_parameters: bool = True) -> SensitivityBundle:
        """Torque gradients over the sweep in design coordinates

        Parameter columns are skipped (left zero) when `with_parameters` is off,
        which saves the geometry rebuilds of shape-only runs.
        """
        if with_parameters:
            dcdp = self.control_point_jacobian(state)
        else:
            dcdp = sparse.csc_matrix((2 * state.geometry.n_points, self.space.n_parameters))
        return sweep_sensitivities(
            state.builder,
            state.result,
            dcdp,
            physical_derivatives(state.geometry),
            self.space,
            offset_jacobian(state.geometry, self.layout),
            self.threads,
        )
