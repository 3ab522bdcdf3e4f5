"""NURBS patches, the geometric mapping and knot refinement"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from isomotor.common.exceptions import DomainError, GeometryError
from isomotor.common.types import EdgeName, FloatArray, IntArray

from ._basis import BasisFunctionSet
from ._knots import KnotVector, insert_knot

__all__ = ["NurbsPatch", "MappingValue", "evaluate_mapping", "refine", "EDGES"]

EDGES: Tuple[EdgeName, ...] = ("south", "north", "west", "east")


@dataclass(frozen=True)
class MappingValue:
    """Physical point, Jacobian J[a, b] = dx_a/dxi_b and its determinant"""

    x: FloatArray
    jacobian: FloatArray
    det: float


class NurbsPatch:
    """A single NURBS patch F: [0,1]^2 -> R^2"""

    def __init__(self, basis: BasisFunctionSet, control_points: FloatArray):
        """Patch from a basis and a tensor-ordered control net

        Parameters
        ----------
        basis : BasisFunctionSet
            rational basis
        control_points : FloatArray
            coordinates in meters, shape (n_u, n_v, 2)
        """
        control_points = np.array(control_points, dtype=float)
        if control_points.shape != basis.shape + (2,):
            raise ValueError(f"control points must have shape {basis.shape + (2,)}, got {control_points.shape}")
        control_points.setflags(write=False)
        self._basis = basis
        self._control_points = control_points

    @property
    def basis(self) -> BasisFunctionSet:
        """Underlying basis"""
        return self._basis

    @property
    def control_points(self) -> FloatArray:
        """Control net of shape (n_u, n_v, 2)"""
        return self._control_points

    @property
    def shape(self) -> Tuple[int, int]:
        """Control net shape (n_u, n_v)"""
        return self._basis.shape

    def __repr__(self) -> str:
        return f"NurbsPatch(shape={self.shape}, degrees={self._basis.degrees})"

    def with_control_points(self, control_points: FloatArray) -> NurbsPatch:
        """Same basis, new control net"""
        return NurbsPatch(self._basis, control_points)

    def transformed(self, matrix: FloatArray, shift: Sequence[float] = (0.0, 0.0)) -> NurbsPatch:
        """Affine image x -> matrix @ x + shift (weights are unchanged)"""
        points = self._control_points @ np.asarray(matrix, dtype=float).T + np.asarray(shift, dtype=float)
        return NurbsPatch(self._basis, points)

    def map(self, xi: FloatArray, eta: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """Vectorized mapping

        Returns
        -------
        Tuple[FloatArray, FloatArray, FloatArray]
            points (npts, 2), Jacobians (npts, 2, 2) and determinants (npts,)
        """
        evaluation = self._basis.evaluate(xi, eta)
        points = self._control_points.reshape(-1, 2)[evaluation.indices]
        x = np.einsum("qk,qkd->qd", evaluation.values, points)
        jacobian = np.einsum("qkb,qka->qab", evaluation.gradients, points)
        det = jacobian[:, 0, 0] * jacobian[:, 1, 1] - jacobian[:, 0, 1] * jacobian[:, 1, 0]
        return x, jacobian, det

    def edge_local_indices(self, edge: EdgeName) -> IntArray:
        """Flat control net indices on an edge, ordered by increasing edge parameter"""
        n_u, n_v = self.shape
        grid = np.arange(n_u * n_v).reshape(n_u, n_v)
        if edge == "south":
            return grid[:, 0]
        if edge == "north":
            return grid[:, -1]
        if edge == "west":
            return grid[0, :]
        if edge == "east":
            return grid[-1, :]
        raise ValueError(f"unknown edge '{edge}'")

    def boundary_local_indices(self) -> IntArray:
        """Flat indices of every control point on the patch boundary"""
        return np.unique(np.concatenate([self.edge_local_indices(edge) for edge in EDGES]))


def edge_points(edge: EdgeName, s: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Parametric coordinates along an edge for edge parameters s"""
    s = np.asarray(s, dtype=float)
    zeros, ones = np.zeros_like(s), np.ones_like(s)
    return {
        "south": (s, zeros),
        "north": (s, ones),
        "west": (zeros, s),
        "east": (ones, s),
    }[edge]


def evaluate_mapping(patch: NurbsPatch, point: Tuple[float, float], patch_id: int = -1) -> MappingValue:
    """Evaluate x = F(point), its Jacobian and determinant

    Parameters
    ----------
    patch : NurbsPatch
        mapped patch
    point : Tuple[float, float]
        parametric coordinate in [0,1]^2
    patch_id : int, optional
        identifier reported with errors, by default -1

    Returns
    -------
    MappingValue
        x, J_F and det(J_F)

    Raises
    ------
    DomainError
        if the point lies outside [0,1]^2
    GeometryError
        if det(J_F) <= 0 at the point
    """
    xi, eta = float(point[0]), float(point[1])
    if not (0.0 <= xi <= 1.0 and 0.0 <= eta <= 1.0):
        raise DomainError(f"point {point} outside the parametric domain [0,1]^2")
    x, jacobian, det = patch.map(np.array([xi]), np.array([eta]))
    if det[0] <= 0.0:
        raise GeometryError(f"degenerate mapping (det = {det[0]:.3e}) in patch {patch_id} at {point}", patch_id, point)
    return MappingValue(x[0], jacobian[0], float(det[0]))


def refine(patch: NurbsPatch, new_knots_u: Sequence[float] = (), new_knots_v: Sequence[float] = ()) -> NurbsPatch:
    """Knot insertion in both directions, the geometric map is unchanged

    Parameters
    ----------
    patch : NurbsPatch
        patch to refine
    new_knots_u : Sequence[float], optional
        knots inserted along xi, each strictly inside (0,1)
    new_knots_v : Sequence[float], optional
        knots inserted along eta, each strictly inside (0,1)

    Returns
    -------
    NurbsPatch
        refined patch

    Raises
    ------
    DomainError
        if a knot lies outside the open interval (0,1)
    """
    for knot in list(new_knots_u) + list(new_knots_v):
        if not 0.0 < knot < 1.0:
            raise DomainError(f"inserted knot {knot} must lie strictly inside (0,1)")

    weights = patch.basis.weights
    homogeneous = np.concatenate([patch.control_points * weights[..., None], weights[..., None]], axis=-1)
    knot_u, knot_v = patch.basis.knot_u, patch.basis.knot_v

    for knot in sorted(new_knots_u):
        knot_u, homogeneous = insert_knot(knot_u, homogeneous, knot)
    homogeneous = np.swapaxes(homogeneous, 0, 1)
    for knot in sorted(new_knots_v):
        knot_v, homogeneous = insert_knot(knot_v, homogeneous, knot)
    homogeneous = np.swapaxes(homogeneous, 0, 1)

    new_weights = homogeneous[..., 2]
    control_points = homogeneous[..., :2] / new_weights[..., None]
    return NurbsPatch(BasisFunctionSet(knot_u, knot_v, new_weights), control_points)


def uniform_refine(patch: NurbsPatch, elements_u: int, elements_v: int) -> NurbsPatch:
    """Insert equally spaced knots so a single-element patch gets the requested element counts"""
    knots_u = np.linspace(0.0, 1.0, elements_u + 1)[1:-1]
    knots_v = np.linspace(0.0, 1.0, elements_v + 1)[1:-1]
    return refine(patch, knots_u, knots_v)
