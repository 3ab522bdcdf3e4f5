"""Tensor-product NURBS bases"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from isomotor.common.exceptions import DomainError
from isomotor.common.types import FloatArray, IntArray

from ._knots import KnotVector

__all__ = ["BasisFunctionSet", "BasisValues", "BasisEvaluation", "evaluate_basis"]


@dataclass(frozen=True)
class BasisValues:
    """Nonzero basis functions at a single parametric point"""

    indices: IntArray
    values: FloatArray
    gradients: Optional[FloatArray]


@dataclass(frozen=True)
class BasisEvaluation:
    """Nonzero basis functions at many parametric points

    `indices` are flat control net indices (iu * n_v + iv), shape (npts, nloc);
    `values` has the same shape and `gradients` adds a trailing axis (d/dxi, d/deta).
    """

    indices: IntArray
    values: FloatArray
    gradients: FloatArray


class BasisFunctionSet:
    """Rational tensor-product basis on the unit square"""

    def __init__(self, knot_u: KnotVector, knot_v: KnotVector, weights: Optional[FloatArray] = None):
        """Bivariate NURBS basis

        Parameters
        ----------
        knot_u : KnotVector
            knots along xi
        knot_v : KnotVector
            knots along eta
        weights : Optional[FloatArray], optional
            positive weights of shape (n_u, n_v), by default all ones (pure B-spline)
        """
        shape = (knot_u.n_basis, knot_v.n_basis)
        if weights is None:
            weights = np.ones(shape)
        weights = np.array(weights, dtype=float)
        if weights.shape != shape:
            raise ValueError(f"weights must have shape {shape}, got {weights.shape}")
        if np.any(weights <= 0):
            raise DomainError("NURBS weights must be strictly positive")
        weights.setflags(write=False)
        self._knot_u = knot_u
        self._knot_v = knot_v
        self._weights = weights

    @property
    def knot_u(self) -> KnotVector:
        """Knot vector along xi"""
        return self._knot_u

    @property
    def knot_v(self) -> KnotVector:
        """Knot vector along eta"""
        return self._knot_v

    @property
    def weights(self) -> FloatArray:
        """Weights of shape (n_u, n_v)"""
        return self._weights

    @property
    def shape(self) -> Tuple[int, int]:
        """Number of basis functions per direction"""
        return self._weights.shape  # type: ignore

    @property
    def degrees(self) -> Tuple[int, int]:
        """Polynomial degrees (p_u, p_v)"""
        return self._knot_u.degree, self._knot_v.degree

    @property
    def is_rational(self) -> bool:
        """True when the weights are not all equal"""
        return not np.allclose(self._weights, self._weights.flat[0])

    def evaluate(self, xi: FloatArray, eta: FloatArray) -> BasisEvaluation:
        """Rational basis values and parametric gradients at paired points"""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        span_u, nu, dnu = self._knot_u.evaluate(xi)
        span_v, nv, dnv = self._knot_v.evaluate(eta)
        pu, pv = self.degrees
        n_v = self.shape[1]

        iu = span_u[:, None] - pu + np.arange(pu + 1)[None, :]
        iv = span_v[:, None] - pv + np.arange(pv + 1)[None, :]
        weights = self._weights[iu[:, :, None], iv[:, None, :]]

        weighted = weights * nu[:, :, None] * nv[:, None, :]
        weighted_du = weights * dnu[:, :, None] * nv[:, None, :]
        weighted_dv = weights * nu[:, :, None] * dnv[:, None, :]
        total = weighted.sum(axis=(1, 2))[:, None, None]
        total_du = weighted_du.sum(axis=(1, 2))[:, None, None]
        total_dv = weighted_dv.sum(axis=(1, 2))[:, None, None]

        values = weighted / total
        grad_u = (weighted_du * total - weighted * total_du) / total**2
        grad_v = (weighted_dv * total - weighted * total_dv) / total**2

        npts = xi.size
        nloc = (pu + 1) * (pv + 1)
        indices = (iu[:, :, None] * n_v + iv[:, None, :]).reshape(npts, nloc)
        gradients = np.stack([grad_u.reshape(npts, nloc), grad_v.reshape(npts, nloc)], axis=-1)
        return BasisEvaluation(indices.astype(np.int64), values.reshape(npts, nloc), gradients)


def evaluate_basis(basis: BasisFunctionSet, point: Tuple[float, float], derivative_order: int = 1) -> BasisValues:
    """Evaluate all nonzero basis functions at one parametric point

    Parameters
    ----------
    basis : BasisFunctionSet
        tensor-product basis
    point : Tuple[float, float]
        parametric coordinate (xi, eta) in [0,1]^2
    derivative_order : int, optional
        0 for values only, 1 to include parametric gradients, by default 1

    Returns
    -------
    BasisValues
        tensor indices (nloc, 2), values (nloc,), gradients (nloc, 2) or None

    Raises
    ------
    DomainError
        if the point is outside [0,1]^2
    """
    if derivative_order not in (0, 1):
        raise ValueError("derivative_order must be 0 or 1")
    xi, eta = float(point[0]), float(point[1])
    if not (0.0 <= xi <= 1.0 and 0.0 <= eta <= 1.0):
        raise DomainError(f"point {point} outside the parametric domain [0,1]^2")
    evaluation = basis.evaluate(np.array([xi]), np.array([eta]))
    flat = evaluation.indices[0]
    indices = np.stack(np.divmod(flat, basis.shape[1]), axis=-1)
    gradients = evaluation.gradients[0] if derivative_order == 1 else None
    return BasisValues(indices, evaluation.values[0], gradients)
