"""Field sampling, L2 errors and single domain reference solves"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from isomotor.assembly import DofMap, QuadratureRule, SystemBuilder, kinematics, point_stiffness, quadrature_rules
from isomotor.common.types import FloatArray
from isomotor.materials import MaterialLibrary
from isomotor.splines import MultiPatchGeometry, rotation

from ._newton import FieldSolution, factorize

__all__ = ["FieldSample", "sample_field", "l2_error", "point_load", "solve_dirichlet_problem"]

logger = logging.getLogger(__name__)

PointFunction = Callable[[FloatArray], FloatArray]


@dataclass(frozen=True)
class FieldSample:
    """One row of field.csv"""

    patch: int
    xi: float
    eta: float
    x: float
    y: float
    bx: float
    by: float

    @property
    def magnitude(self) -> float:
        """|B|"""
        return float(np.hypot(self.bx, self.by))


def sample_field(builder: SystemBuilder, solution: FieldSolution, grid: Tuple[int, int] = (5, 5)) -> List[FieldSample]:
    """A_z derived flux density B = (dA/dy, -dA/dx) on a uniform parametric grid of every patch

    Rotor samples are reported in the stator frame, i.e. rotated by beta.
    """
    u_points = builder.point_values(np.asarray(solution.state))
    xi_values = np.linspace(0.0, 1.0, grid[0])
    eta_values = np.linspace(0.0, 1.0, grid[1])
    xi, eta = (a.ravel() for a in np.meshgrid(xi_values, eta_values, indexing="ij"))
    turn = rotation(solution.beta)
    samples: List[FieldSample] = []
    for index, (record, patch_ids) in enumerate(zip(builder.geometry.records, builder.geometry.global_ids)):
        patch = record.patch
        evaluation = patch.basis.evaluate(xi, eta)
        points = patch.control_points.reshape(-1, 2)[evaluation.indices]
        x = np.einsum("qk,qkd->qd", evaluation.values, points)
        jacobian = np.einsum("qkb,qka->qab", evaluation.gradients, points)
        inverse = np.linalg.inv(jacobian)
        grad = np.einsum("qkb,qba->qka", evaluation.gradients, inverse)
        gradient = np.einsum("qka,qk->qa", grad, u_points[patch_ids.ravel()[evaluation.indices]])
        flux = np.stack([gradient[:, 1], -gradient[:, 0]], axis=1)
        if record.side == "rotor":
            x = x @ turn.T
            flux = flux @ turn.T
        for q in range(xi.size):
            samples.append(
                FieldSample(index, float(xi[q]), float(eta[q]), float(x[q, 0]), float(x[q, 1]), float(flux[q, 0]), float(flux[q, 1]))
            )
    return samples


def l2_error(
    geometry: MultiPatchGeometry,
    u_points: FloatArray,
    exact: PointFunction,
    extra_quadrature: int = 2,
    patches: Optional[Sequence[int]] = None,
) -> float:
    """|| u_h - u ||_L2 over the selected patches (all by default)"""
    rules = quadrature_rules(geometry, extra_quadrature)
    total = 0.0
    selected = range(len(geometry)) if patches is None else patches
    for index in selected:
        record, rule = geometry.records[index], rules[index]
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = geometry.global_ids[index].ravel()[rule.indices]
        approximation = np.einsum("qk,qk->q", rule.values, u_points[ids])
        total += float(np.sum((approximation - exact(kin.x)) ** 2 * kin.measure))
    return float(np.sqrt(total))


def point_load(
    geometry: MultiPatchGeometry,
    sources: Mapping[int, PointFunction],
    rules: Optional[Sequence[QuadratureRule]] = None,
) -> FloatArray:
    """int f N_i over the patches with a source, one entry per control point"""
    rules = rules or quadrature_rules(geometry)
    b = np.zeros(geometry.n_points)
    for index, source in sources.items():
        record, rule = geometry.records[index], rules[index]
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = geometry.global_ids[index].ravel()[rule.indices]
        np.add.at(b, ids.ravel(), (rule.values * (source(kin.x) * kin.measure)[:, None]).ravel())
    return b


def solve_dirichlet_problem(
    geometry: MultiPatchGeometry,
    materials: MaterialLibrary,
    sources: Mapping[int, PointFunction],
    extra_quadrature: int = 0,
) -> FloatArray:
    """Linear single domain solve -div(nu grad u) = f with homogeneous Dirichlet data

    Both sides are treated as one conforming domain; antiperiodic pairs are
    folded as in the coupled problem. Returns A_z at every control point.
    """
    rules = quadrature_rules(geometry, extra_quadrature)
    dofs = DofMap(geometry)
    stiffness = dofs.reduce(point_stiffness(geometry, materials, None, rules))
    b = point_load(geometry, sources, rules)
    u = factorize(stiffness).solve(dofs.restrict(b))
    return dofs.to_points(u)
