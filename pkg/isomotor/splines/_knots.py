"""Open knot vectors and univariate B-spline bases"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from isomotor.common.exceptions import DomainError
from isomotor.common.types import FloatArray, IntArray
from isomotor.common.validators import KnotVectorValidator

__all__ = ["KnotVector", "insert_knot"]


class KnotVector:
    """An open, normalized knot vector of a given degree"""

    def __init__(self, knots: Sequence[float], degree: int):
        """Knot vector on [0,1] with end multiplicity degree+1

        Parameters
        ----------
        knots : Sequence[float]
            non-decreasing knots; vectors on another range are rescaled to [0,1]
        degree : int
            polynomial degree p

        Raises
        ------
        DomainError
            if the knots do not form an open knot vector
        """
        array = np.array(knots, dtype=float)
        if array.size and (array[0] != 0.0 or array[-1] != 1.0) and array[-1] > array[0]:
            array = (array - array[0]) / (array[-1] - array[0])
        KnotVectorValidator().validate(array, degree)
        array.setflags(write=False)
        self._knots = array
        self._degree = int(degree)

    @classmethod
    def uniform(cls, degree: int, elements: int = 1) -> KnotVector:
        """Open knot vector with `elements` equal knot spans"""
        interior = np.linspace(0.0, 1.0, elements + 1)[1:-1]
        return cls(np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)]), degree)

    @property
    def knots(self) -> FloatArray:
        """Knot values (read only)"""
        return self._knots

    @property
    def degree(self) -> int:
        """Polynomial degree p"""
        return self._degree

    @property
    def n_basis(self) -> int:
        """Number of basis functions n = len(knots) - p - 1"""
        return self._knots.size - self._degree - 1

    @property
    def breakpoints(self) -> FloatArray:
        """Distinct knot values"""
        return np.unique(self._knots)

    @property
    def n_elements(self) -> int:
        """Number of non-empty knot spans"""
        return self.breakpoints.size - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self._degree == other._degree and np.array_equal(self._knots, other._knots)

    def __repr__(self) -> str:
        return f"KnotVector(degree={self._degree}, knots={self._knots.tolist()})"

    def find_span(self, x: FloatArray) -> IntArray:
        """Knot span index s with t_s <= x < t_(s+1), the last span is closed on the right"""
        spans = np.searchsorted(self._knots, x, side="right") - 1
        return np.clip(spans, self._degree, self.n_basis - 1).astype(np.int64)

    def evaluate(self, x: FloatArray, derivative: bool = True) -> Tuple[IntArray, FloatArray, FloatArray]:
        """Nonzero basis functions and their first derivatives at many points

        Parameters
        ----------
        x : FloatArray
            parametric points in [0,1]
        derivative : bool, optional
            also compute first derivatives, by default True

        Returns
        -------
        Tuple[IntArray, FloatArray, FloatArray]
            spans (npts,), values (npts, p+1) of functions s-p..s and derivatives (npts, p+1)

        Raises
        ------
        DomainError
            if any point lies outside [0,1]
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise DomainError("parametric coordinate outside [0,1]")
        p = self._degree
        t = self._knots
        spans = self.find_span(x)
        values = np.ones((x.size, 1))
        lower = values
        for j in range(1, p + 1):
            left = [x - t[spans + 1 - k] for k in range(j + 1)]
            right = [t[spans + k] - x for k in range(j + 1)]
            new = np.zeros((x.size, j + 1))
            saved = np.zeros(x.size)
            for r in range(j):
                temp = values[:, r] / (right[r + 1] + left[j - r])
                new[:, r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            new[:, j] = saved
            lower = values
            values = new

        derivatives = np.zeros_like(values)
        if derivative and p > 0:
            for i in range(p + 1):
                first = spans - p + i
                if i > 0:
                    denom = t[first + p] - t[first]
                    safe = np.where(denom > 0, denom, 1.0)
                    derivatives[:, i] += np.where(denom > 0, p * lower[:, i - 1] / safe, 0.0)
                if i < p:
                    denom = t[first + p + 1] - t[first + 1]
                    safe = np.where(denom > 0, denom, 1.0)
                    derivatives[:, i] -= np.where(denom > 0, p * lower[:, i] / safe, 0.0)
        return spans, values, derivatives

    def greville(self) -> FloatArray:
        """Greville abscissae, one per basis function"""
        p = self._degree
        if p == 0:
            return 0.5 * (self._knots[:-1] + self._knots[1:])
        return np.array([self._knots[i + 1 : i + p + 1].mean() for i in range(self.n_basis)])


def insert_knot(knot_vector: KnotVector, homogeneous: FloatArray, x: float) -> Tuple[KnotVector, FloatArray]:
    """Insert a single knot (Boehm's algorithm) along the first axis of a control net

    Parameters
    ----------
    knot_vector : KnotVector
        current knots
    homogeneous : FloatArray
        weighted control points (w*x, w*y, w) with the refined direction on axis 0
    x : float
        new knot, strictly inside (0,1)

    Returns
    -------
    Tuple[KnotVector, FloatArray]
        refined knots and homogeneous control net with one more entry on axis 0

    Raises
    ------
    DomainError
        if the knot is not interior or would exceed multiplicity p
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"inserted knot {x} must lie strictly inside (0,1)")
    p = knot_vector.degree
    t = knot_vector.knots
    multiplicity = int(np.count_nonzero(t == x))
    if multiplicity >= p:
        raise DomainError(f"knot {x} already has multiplicity {multiplicity} >= degree {p}")
    k = int(np.searchsorted(t, x, side="right") - 1)

    n = homogeneous.shape[0]
    refined = np.empty((n + 1,) + homogeneous.shape[1:])
    refined[: k - p + 1] = homogeneous[: k - p + 1]
    refined[k - multiplicity + 1 :] = homogeneous[k - multiplicity :]
    for i in range(k - p + 1, k - multiplicity + 1):
        alpha = (x - t[i]) / (t[i + p] - t[i])
        refined[i] = alpha * homogeneous[i] + (1.0 - alpha) * homogeneous[i - 1]

    knots = np.insert(t, k + 1, x)
    return KnotVector(knots, p), refined
