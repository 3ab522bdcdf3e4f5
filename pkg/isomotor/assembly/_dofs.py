"""Degrees of freedom: Dirichlet elimination and antiperiodic folding"""

from __future__ import annotations

import logging

import numpy as np
from scipy import sparse

from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray, IntArray, Side
from isomotor.splines import MultiPatchGeometry

__all__ = ["DofMap"]

logger = logging.getLogger(__name__)


class DofMap:
    """Prolongation from rotor and stator unknowns to all control points

    Rotor unknowns come first. Every control point is a free unknown, eliminated
    (Dirichlet, row of zeros) or an antiperiodic slave whose row carries -1 in
    its master's column.
    """

    def __init__(self, geometry: MultiPatchGeometry):
        n_points = geometry.n_points
        dirichlet = set(geometry.dirichlet.tolist())
        slaves = {int(slave): int(master) for slave, master in geometry.antiperiodic}
        if set(slaves) & set(slaves.values()):
            raise ConfigError("antiperiodic pairs must not chain")

        point_dof = np.full(n_points, -1, dtype=np.int64)
        counts = {}
        next_dof = 0
        for side in ("rotor", "stator"):
            start = next_dof
            for point in geometry.side_points(side):  # type: ignore
                point = int(point)
                if point in dirichlet or point in slaves:
                    continue
                point_dof[point] = next_dof
                next_dof += 1
            counts[side] = next_dof - start

        rows, cols, data = [], [], []
        for point in range(n_points):
            if point_dof[point] >= 0:
                rows.append(point)
                cols.append(point_dof[point])
                data.append(1.0)
            elif point in slaves and point not in dirichlet:
                master = point_dof[slaves[point]]
                if master < 0:
                    raise ConfigError(f"antiperiodic master of point {point} is not a free unknown")
                rows.append(point)
                cols.append(master)
                data.append(-1.0)

        self.n_points = n_points
        self.n_rotor = counts["rotor"]
        self.n_stator = counts["stator"]
        self.point_dof = point_dof
        self.prolongation = sparse.csr_matrix((data, (rows, cols)), shape=(n_points, next_dof))
        self._restriction = self.prolongation.T.tocsr()
        logger.debug("Dofs | rotor: %d | stator: %d", self.n_rotor, self.n_stator)

    def __repr__(self) -> str:
        return f"DofMap(rotor={self.n_rotor}, stator={self.n_stator})"

    @property
    def size(self) -> int:
        """Number of unknowns over both sides"""
        return self.n_rotor + self.n_stator

    def side_slice(self, side: Side) -> slice:
        """Range of one side's unknowns"""
        return slice(0, self.n_rotor) if side == "rotor" else slice(self.n_rotor, self.size)

    def to_points(self, u: FloatArray) -> FloatArray:
        """Control point values from unknowns"""
        return self.prolongation @ np.asarray(u, dtype=float)

    def restrict(self, values: FloatArray) -> FloatArray:
        """Transpose of `to_points`, folds point vectors onto unknowns"""
        return self._restriction @ values

    def reduce(self, matrix: sparse.spmatrix) -> sparse.csr_matrix:
        """P^T A P"""
        return (self._restriction @ matrix @ self.prolongation).tocsr()

    def trace_count(self, geometry: MultiPatchGeometry, side: Side) -> int:
        """Number of unknowns carried by the airgap trace of one side"""
        points = geometry.tagged_points("airgap", side)
        columns = self.prolongation[points].indices
        return int(np.unique(columns).size)

    def dofs_of(self, points: IntArray) -> IntArray:
        """Unknowns touched by a set of control points"""
        return np.unique(self.prolongation[np.asarray(points)].indices)
