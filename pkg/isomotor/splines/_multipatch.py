"""Multipatch geometries with materials, regions and boundary tags"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from isomotor.common.exceptions import ConfigError, GeometryError
from isomotor.common.types import BoundaryTag, EdgeName, FloatArray, IntArray, Side

from ._patch import NurbsPatch

__all__ = [
    "MagnetSpec",
    "ExcitationSpec",
    "PatchRecord",
    "MultiPatchGeometry",
    "rotation",
]

logger = logging.getLogger(__name__)

MATCH_TOLERANCE = 1e-9


def rotation(angle: float) -> FloatArray:
    """2x2 counter-clockwise rotation matrix"""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class MagnetSpec:
    """Permanent magnet region: remanence B_r in tesla and direction alpha in radians"""

    remanence: float
    angle: float

    def perpendicular(self) -> FloatArray:
        """Rotated remanence B_r (-sin alpha, cos alpha)"""
        return self.remanence * np.array([-np.sin(self.angle), np.cos(self.angle)])


@dataclass(frozen=True)
class ExcitationSpec:
    """Coil region: phase index k in {0,1,2}, winding sign and coil identifier"""

    phase: int
    sign: int
    coil: int

    def __post_init__(self):
        if self.phase not in (0, 1, 2):
            raise ConfigError(f"phase index must be 0, 1 or 2, got {self.phase}")
        if self.sign not in (-1, 1):
            raise ConfigError(f"winding sign must be +1 or -1, got {self.sign}")


Region = Union[MagnetSpec, ExcitationSpec, None]


@dataclass(frozen=True)
class PatchRecord:
    """Everything the solver needs to know about one patch"""

    patch: NurbsPatch
    material: str
    side: Side
    region: Region = None
    edge_tags: Mapping[EdgeName, BoundaryTag] = field(default_factory=dict)
    label: str = ""


def _group_coincident(points: FloatArray, tolerance: float) -> IntArray:
    """Label coincident points with consecutive ids in order of first appearance"""
    parent = np.arange(points.shape[0])

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(cKDTree(points).query_pairs(tolerance)):
        root_i, root_j = find(i), find(j)
        if root_i != root_j:
            parent[max(root_i, root_j)] = min(root_i, root_j)

    roots = np.array([find(i) for i in range(points.shape[0])])
    _, first, labels = np.unique(roots, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[labels].astype(np.int64)


class MultiPatchGeometry:
    """Rotor and stator patches with shared control point numbering"""

    def __init__(
        self,
        records: Sequence[PatchRecord],
        global_ids: Sequence[IntArray],
        dirichlet: IntArray,
        antiperiodic: IntArray,
        period: float = np.pi / 2,
        symmetry_factor: int = 4,
        metadata: Optional[Dict[str, Any]] = None,
    ):
        """Use `MultiPatchGeometry.from_records` to build the topology from coordinates

        Parameters
        ----------
        records : Sequence[PatchRecord]
            patches with material, side, region and edge tags
        global_ids : Sequence[IntArray]
            per patch array (n_u, n_v) of global control point ids
        dirichlet : IntArray
            global ids with A_z = 0
        antiperiodic : IntArray
            pairs (slave, master) with u_slave = -u_master
        period : float, optional
            angular extent of the model, by default pi/2
        symmetry_factor : int, optional
            number of model copies forming the full machine, by default 4
        metadata : Optional[Dict[str, Any]], optional
            template information such as offsetable surface points, by default None
        """
        self._records = tuple(records)
        self._global_ids = tuple(np.asarray(ids, dtype=np.int64) for ids in global_ids)
        self._dirichlet = np.unique(np.asarray(dirichlet, dtype=np.int64))
        self._antiperiodic = np.asarray(antiperiodic, dtype=np.int64).reshape(-1, 2)
        self.period = float(period)
        self.symmetry_factor = int(symmetry_factor)
        self.metadata: Dict[str, Any] = dict(metadata or {})
        self._n_points = int(max(ids.max() for ids in self._global_ids)) + 1 if self._global_ids else 0

    @classmethod
    def from_records(
        cls,
        records: Sequence[PatchRecord],
        period: float = np.pi / 2,
        symmetry_factor: int = 4,
        metadata: Optional[Dict[str, Any]] = None,
        tolerance: float = MATCH_TOLERANCE,
    ) -> MultiPatchGeometry:
        """Derive the conforming numbering, Dirichlet set and antiperiodic pairs from coordinates

        Conforming interfaces share control points; coincident control points of the
        same side receive one global id. Rotor and stator never share ids.
        """
        global_ids: List[Optional[IntArray]] = [None] * len(records)
        offset = 0
        for side in ("rotor", "stator"):
            members = [i for i, record in enumerate(records) if record.side == side]
            if not members:
                continue
            points = np.concatenate([records[i].patch.control_points.reshape(-1, 2) for i in members])
            scale = max(float(np.abs(points).max()), 1.0)
            labels = _group_coincident(points, tolerance * scale) + offset
            start = 0
            for i in members:
                size = int(np.prod(records[i].patch.shape))
                global_ids[i] = labels[start : start + size].reshape(records[i].patch.shape)
                start += size
            offset = int(labels.max()) + 1

        ids = [np.asarray(g) for g in global_ids]
        coordinates = np.zeros((offset, 2))
        for record, patch_ids in zip(records, ids):
            coordinates[patch_ids.ravel()] = record.patch.control_points.reshape(-1, 2)

        dirichlet = cls._tagged_ids(records, ids, "dirichlet")
        pairs = []
        for side in ("rotor", "stator"):
            candidates = np.array(
                sorted(
                    set(cls._tagged_ids(records, ids, "antiperiodic", side).tolist()) - set(dirichlet.tolist())
                ),
                dtype=np.int64,
            )
            if candidates.size == 0:
                continue
            points = coordinates[candidates]
            scale = max(float(np.abs(points).max()), 1.0)
            tree = cKDTree(points)
            distances, hits = tree.query(points @ rotation(period).T)
            for master, (distance, hit) in enumerate(zip(distances, hits)):
                if distance <= tolerance * scale and hit != master:
                    pairs.append((candidates[hit], candidates[master]))
        antiperiodic = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        logger.debug(
            "Topology | points: %d | dirichlet: %d | antiperiodic pairs: %d", offset, dirichlet.size, len(pairs)
        )
        return cls(records, ids, dirichlet, antiperiodic, period, symmetry_factor, metadata)

    @staticmethod
    def _tagged_ids(
        records: Sequence[PatchRecord], ids: Sequence[IntArray], tag: str, side: Optional[str] = None
    ) -> IntArray:
        tagged = []
        for record, patch_ids in zip(records, ids):
            if side is not None and record.side != side:
                continue
            for edge, edge_tag in record.edge_tags.items():
                if edge_tag == tag:
                    tagged.append(patch_ids.ravel()[record.patch.edge_local_indices(edge)])
        if not tagged:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(tagged))

    @property
    def records(self) -> Tuple[PatchRecord, ...]:
        """Patch records"""
        return self._records

    @property
    def patches(self) -> Tuple[NurbsPatch, ...]:
        """Patches in record order"""
        return tuple(record.patch for record in self._records)

    @property
    def global_ids(self) -> Tuple[IntArray, ...]:
        """Per patch global control point ids"""
        return self._global_ids

    @property
    def n_points(self) -> int:
        """Number of distinct control points over both sides"""
        return self._n_points

    @property
    def dirichlet(self) -> IntArray:
        """Global ids carrying homogeneous Dirichlet data"""
        return self._dirichlet

    @property
    def antiperiodic(self) -> IntArray:
        """Antiperiodic (slave, master) pairs"""
        return self._antiperiodic

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        counts = {side: sum(record.side == side for record in self._records) for side in ("rotor", "stator")}
        return f"MultiPatchGeometry(patches={len(self)}, points={self.n_points}, sides={counts})"

    def patch_indices(self, side: Side) -> List[int]:
        """Indices of the patches on one side"""
        return [i for i, record in enumerate(self._records) if record.side == side]

    def side_points(self, side: Side) -> IntArray:
        """Sorted global ids of the control points on one side"""
        members = self.patch_indices(side)
        if not members:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([self._global_ids[i].ravel() for i in members]))

    def tagged_points(self, tag: BoundaryTag, side: Optional[Side] = None) -> IntArray:
        """Global ids on edges carrying a boundary tag"""
        return self._tagged_ids(self._records, self._global_ids, tag, side)

    def control_points(self) -> FloatArray:
        """Global control point coordinates of shape (n_points, 2)"""
        coordinates = np.zeros((self._n_points, 2))
        for record, ids in zip(self._records, self._global_ids):
            coordinates[ids.ravel()] = record.patch.control_points.reshape(-1, 2)
        return coordinates

    def with_control_points(self, coordinates: FloatArray) -> MultiPatchGeometry:
        """Same topology and weights with moved control points"""
        coordinates = np.asarray(coordinates, dtype=float)
        if coordinates.shape != (self._n_points, 2):
            raise ValueError(f"expected coordinates of shape {(self._n_points, 2)}, got {coordinates.shape}")
        records = [
            PatchRecord(
                record.patch.with_control_points(coordinates[ids]),
                record.material,
                record.side,
                record.region,
                record.edge_tags,
                record.label,
            )
            for record, ids in zip(self._records, self._global_ids)
        ]
        return MultiPatchGeometry(
            records,
            self._global_ids,
            self._dirichlet,
            self._antiperiodic,
            self.period,
            self.symmetry_factor,
            self.metadata,
        )

    def with_regions(self, regions: Mapping[int, Region]) -> MultiPatchGeometry:
        """Replace the region data of selected patches"""
        records = [
            PatchRecord(record.patch, record.material, record.side, regions.get(i, record.region), record.edge_tags, record.label)
            for i, record in enumerate(self._records)
        ]
        return MultiPatchGeometry(
            records,
            self._global_ids,
            self._dirichlet,
            self._antiperiodic,
            self.period,
            self.symmetry_factor,
            self.metadata,
        )

    def rotate_side(self, side: Side, angle: float) -> MultiPatchGeometry:
        """Rigidly rotate one side counter-clockwise, magnetization directions included"""
        matrix = rotation(angle)
        records = []
        for record in self._records:
            if record.side != side:
                records.append(record)
                continue
            region = record.region
            if isinstance(region, MagnetSpec):
                region = MagnetSpec(region.remanence, region.angle + angle)
            records.append(
                PatchRecord(record.patch.transformed(matrix), record.material, side, region, record.edge_tags, record.label)
            )
        return MultiPatchGeometry(
            records,
            self._global_ids,
            self._dirichlet,
            self._antiperiodic,
            self.period,
            self.symmetry_factor,
            self.metadata,
        )

    def check_jacobians(self, points_per_direction: int = 4) -> None:
        """Verify det(J_F) > 0 on a Gauss grid of every knot span

        Raises
        ------
        GeometryError
            naming the first offending patch and parametric point
        """
        nodes = 0.5 * (np.polynomial.legendre.leggauss(points_per_direction)[0] + 1.0)
        for index, patch in enumerate(self.patches):
            breaks_u = patch.basis.knot_u.breakpoints
            breaks_v = patch.basis.knot_v.breakpoints
            xi = (breaks_u[:-1, None] + np.diff(breaks_u)[:, None] * nodes[None, :]).ravel()
            eta = (breaks_v[:-1, None] + np.diff(breaks_v)[:, None] * nodes[None, :]).ravel()
            grid_u, grid_v = np.meshgrid(xi, eta, indexing="ij")
            _, _, det = patch.map(grid_u.ravel(), grid_v.ravel())
            if np.any(det <= 0.0):
                worst = int(np.argmin(det))
                point = (float(grid_u.ravel()[worst]), float(grid_v.ravel()[worst]))
                label = self._records[index].label or str(index)
                raise GeometryError(f"inverted or degenerate patch '{label}' (det = {det[worst]:.3e})", index, point)
