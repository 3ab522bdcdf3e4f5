"""Radial offsets of the rotor surface control points"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy import sparse

from isomotor.common.exceptions import ConfigError, NumericIntervalError
from isomotor.common.types import FloatArray, IntArray
from isomotor.splines import MultiPatchGeometry

__all__ = ["MAX_OFFSET", "ControlPointOffsets", "apply_offsets"]

logger = logging.getLogger(__name__)

MAX_OFFSET = 1.5e-3


class ControlPointOffsets:
    """Map between offset design values and physical per-point offsets

    Physical offsets follow the surface control points sorted by polar angle.
    With symmetry on, a point and its mirror image across the pole axis share one
    design value; design value j drives the j-th pair counted from the q-axis.
    """

    def __init__(self, ids: IntArray, angles: FloatArray, mirror: IntArray, symmetric: bool = True):
        """Offset layout

        Parameters
        ----------
        ids : IntArray
            global ids of the offsetable control points, sorted by polar angle
        angles : FloatArray
            their polar angles in the unperturbed geometry
        mirror : IntArray
            position of each point's mirror image within `ids`
        symmetric : bool, optional
            fold mirrored pairs into one design value, by default True
        """
        self.ids = np.asarray(ids, dtype=np.int64)
        self.angles = np.asarray(angles, dtype=float)
        mirror = np.asarray(mirror, dtype=np.int64)
        if not (self.ids.shape == self.angles.shape == mirror.shape):
            raise ConfigError("offset ids, angles and mirror map must have the same length")
        self.symmetric = bool(symmetric)
        if self.symmetric:
            if np.any(mirror[mirror] != np.arange(mirror.size)):
                raise ConfigError("mirror map is not an involution")
            representative = np.minimum(np.arange(mirror.size), mirror)
            _, design_index = np.unique(representative, return_inverse=True)
        else:
            design_index = np.arange(self.ids.size)
        self.design_index = design_index.astype(np.int64)

    @classmethod
    def from_geometry(cls, geometry: MultiPatchGeometry, symmetric: bool = True) -> ControlPointOffsets:
        """Offset layout recorded by the template"""
        metadata = geometry.metadata
        try:
            return cls(metadata["surface_ids"], metadata["surface_angles"], metadata["surface_mirror"], symmetric)
        except KeyError as exc:
            raise ConfigError(f"geometry carries no offset layout ({exc})") from exc

    def __repr__(self) -> str:
        return f"ControlPointOffsets(points={self.n_physical}, design={self.n_design}, symmetric={self.symmetric})"

    @property
    def n_physical(self) -> int:
        """Number of offsetable control points"""
        return int(self.ids.size)

    @property
    def n_design(self) -> int:
        """Number of offset design values"""
        return int(self.design_index.max()) + 1 if self.design_index.size else 0

    def expansion(self) -> sparse.csr_matrix:
        """0/1 matrix E with physical = E @ design"""
        data = np.ones(self.n_physical)
        rows = np.arange(self.n_physical)
        return sparse.csr_matrix((data, (rows, self.design_index)), shape=(self.n_physical, self.n_design))

    def expand(self, design: FloatArray) -> FloatArray:
        """Physical offsets from design values"""
        design = np.asarray(design, dtype=float)
        if design.shape != (self.n_design,):
            raise ValueError(f"expected {self.n_design} offset design values, got {design.shape}")
        return design[self.design_index]

    def fold(self, physical_gradient: FloatArray) -> FloatArray:
        """Chain rule: gradient with respect to design values"""
        return np.bincount(self.design_index, weights=physical_gradient, minlength=self.n_design)

    def to_design(self, physical: FloatArray) -> FloatArray:
        """Design values from physical offsets

        Raises
        ------
        ConfigError
            if mirrored offsets differ while symmetry is on
        """
        physical = np.asarray(physical, dtype=float)
        design = np.zeros(self.n_design)
        design[self.design_index] = physical
        if not np.allclose(design[self.design_index], physical, rtol=0.0, atol=1e-15):
            raise ConfigError("mirrored offsets differ but the offsets are symmetric")
        return design


def apply_offsets(
    geometry: MultiPatchGeometry, offsets: FloatArray, layout: Optional[ControlPointOffsets] = None
) -> MultiPatchGeometry:
    """Move the offsetable control points radially by their physical offsets

    Parameters
    ----------
    geometry : MultiPatchGeometry
        unperturbed geometry from the template
    offsets : FloatArray
        one offset per surface control point in meters, positive outward
    layout : Optional[ControlPointOffsets], optional
        offset layout, by default read from the geometry

    Returns
    -------
    MultiPatchGeometry
        the same object when every offset is zero

    Raises
    ------
    NumericIntervalError
        if an offset exceeds 1.5 mm in magnitude
    GeometryError
        if the move inverts a patch
    """
    layout = layout or ControlPointOffsets.from_geometry(geometry, symmetric=False)
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (layout.n_physical,):
        raise ValueError(f"expected {layout.n_physical} offsets, got {offsets.shape}")
    if np.any(np.abs(offsets) > MAX_OFFSET * (1 + 1e-12)):
        raise NumericIntervalError(f"offsets are limited to {MAX_OFFSET * 1e3} mm, got {np.abs(offsets).max() * 1e3:.4f} mm")
    if not np.any(offsets):
        return geometry

    coordinates = geometry.control_points()
    points = coordinates[layout.ids]
    coordinates[layout.ids] = points + offsets[:, None] * points / np.linalg.norm(points, axis=1)[:, None]
    moved = geometry.with_control_points(coordinates)
    moved.check_jacobians()
    logger.debug("Offsets | moved: %d | max: %.3e m", np.count_nonzero(offsets), np.abs(offsets).max())
    return moved
