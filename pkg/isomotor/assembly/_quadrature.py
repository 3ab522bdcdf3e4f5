"""Gauss rules on patches and edges, cached per topology"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from isomotor.common.exceptions import GeometryError
from isomotor.common.types import EdgeName, FloatArray, IntArray
from isomotor.splines import KnotVector, NurbsPatch, edge_points

__all__ = ["QuadratureRule", "EdgeRule", "Kinematics", "gauss_points", "kinematics"]


def gauss_points(knot_vector: KnotVector, count: int) -> Tuple[FloatArray, FloatArray]:
    """Gauss-Legendre nodes and weights on every nonempty span of a knot vector"""
    nodes, weights = np.polynomial.legendre.leggauss(count)
    breaks = knot_vector.breakpoints
    lengths = np.diff(breaks)
    points = breaks[:-1, None] + 0.5 * lengths[:, None] * (nodes[None, :] + 1.0)
    return points.ravel(), (0.5 * lengths[:, None] * weights[None, :]).ravel()


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss rule of a patch with the basis evaluated at its points

    Only parametric data is stored; physical quantities follow from the
    control points through `kinematics`.
    """

    xi: FloatArray
    eta: FloatArray
    weights: FloatArray
    indices: IntArray
    values: FloatArray
    gradients: FloatArray

    @classmethod
    def from_patch(cls, patch: NurbsPatch, extra: int = 0) -> QuadratureRule:
        """p + 1 + extra points per direction and knot span"""
        basis = patch.basis
        pu, pv = basis.degrees
        xi, wu = gauss_points(basis.knot_u, max(pu, pv) + 1 + extra)
        eta, wv = gauss_points(basis.knot_v, max(pu, pv) + 1 + extra)
        grid_u, grid_v = np.meshgrid(xi, eta, indexing="ij")
        weights = np.outer(wu, wv).ravel()
        evaluation = basis.evaluate(grid_u.ravel(), grid_v.ravel())
        return cls(grid_u.ravel(), grid_v.ravel(), weights, evaluation.indices, evaluation.values, evaluation.gradients)

    @property
    def size(self) -> int:
        """Number of quadrature points"""
        return int(self.weights.size)


@dataclass(frozen=True)
class EdgeRule:
    """Gauss rule along one patch edge; `direction` is the parametric axis along the edge"""

    edge: EdgeName
    direction: int
    s: FloatArray
    weights: FloatArray
    indices: IntArray
    values: FloatArray
    gradients: FloatArray

    @classmethod
    def from_patch(cls, patch: NurbsPatch, edge: EdgeName, extra: int = 0) -> EdgeRule:
        """p + 1 + extra points per span of the knot vector running along the edge"""
        basis = patch.basis
        direction = 0 if edge in ("south", "north") else 1
        knots = basis.knot_u if direction == 0 else basis.knot_v
        s, weights = gauss_points(knots, knots.degree + 1 + extra)
        xi, eta = edge_points(edge, s)
        evaluation = basis.evaluate(xi, eta)
        return cls(edge, direction, s, weights, evaluation.indices, evaluation.values, evaluation.gradients)


@dataclass(frozen=True)
class Kinematics:
    """Physical points, Jacobians and basis gradients at quadrature points

    `grad[q, k, a]` is dR_k/dx_a; `measure` is |det J| times the parametric weight.
    """

    x: FloatArray
    jacobian: FloatArray
    det: FloatArray
    inverse: FloatArray
    grad: FloatArray
    measure: FloatArray


def kinematics(rule: QuadratureRule, control_points: FloatArray, label: str = "") -> Kinematics:
    """Pull the cached parametric data forward with the given control net

    Raises
    ------
    GeometryError
        if det J <= 0 at a quadrature point
    """
    points = np.asarray(control_points).reshape(-1, 2)[rule.indices]
    x = np.einsum("qk,qkd->qd", rule.values, points)
    jacobian = np.einsum("qkb,qka->qab", rule.gradients, points)
    det = jacobian[:, 0, 0] * jacobian[:, 1, 1] - jacobian[:, 0, 1] * jacobian[:, 1, 0]
    if np.any(det <= 0.0):
        worst = int(np.argmin(det))
        raise GeometryError(
            f"singular Jacobian in patch '{label}' at a quadrature point (det = {det[worst]:.3e})",
            point=(float(rule.xi[worst]), float(rule.eta[worst])),
        )
    inverse = np.empty_like(jacobian)
    inverse[:, 0, 0] = jacobian[:, 1, 1] / det
    inverse[:, 1, 1] = jacobian[:, 0, 0] / det
    inverse[:, 0, 1] = -jacobian[:, 0, 1] / det
    inverse[:, 1, 0] = -jacobian[:, 1, 0] / det
    grad = np.einsum("qkb,qba->qka", rule.gradients, inverse)
    return Kinematics(x, jacobian, det, inverse, grad, det * rule.weights)
