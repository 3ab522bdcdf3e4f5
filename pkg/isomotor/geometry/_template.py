"""Parametric quarter model of a V-shape interior permanent magnet machine

The rotor half pole between the q-axis cut (0 deg) and the pole axis (45 deg) is a
structured grid of vertex columns 0..7 and vertex rows 0..4; the other half pole is
its mirror image across the pole axis. Rows are the bore arc, the lower and upper
magnet strip polylines, the rotor surface and the airgap arc. The stator is a grid
of three cells per slot (tooth half, slot, tooth half) over four radial bands.

Every coarse cell is a ruled biquadratic NURBS patch; xi runs outward between two
row curves and eta runs counter-clockwise between two straight column lines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from isomotor.common.exceptions import ConfigError, GeometryError
from isomotor.common.types import FloatArray
from isomotor.splines import (
    BasisFunctionSet,
    ExcitationSpec,
    KnotVector,
    MagnetSpec,
    MultiPatchGeometry,
    NurbsPatch,
    PatchRecord,
    uniform_refine,
)

from ._parameters import ParameterSet

__all__ = [
    "TemplateResolution",
    "RotorLayout",
    "MachineTemplate",
    "rotor_layout",
    "build_geometry",
    "STATOR_SLOTS",
    "WINDING",
]

logger = logging.getLogger(__name__)

STATOR_SLOTS = 6
SLOT_PITCH = np.pi / 12
# (phase index, winding sign) per slot of the quarter model
WINDING: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 1), (1, -1), (1, -1), (2, 1), (2, 1))

HALF_POLE_MATERIALS = ("iron", "air", "iron", "magnet", "iron", "air", "iron")
HALF_POLE_LABELS = ("q_bridge", "outer_slit", "outer_rib", "magnet", "inner_rib", "inner_slit", "post")
ROTOR_BANDS = ("yoke", "strip", "cover", "air_layer")
STATOR_BANDS = ("airgap", "tooth_tip", "slot", "yoke")

POLE_AXIS = np.pi / 4
CUT_NORMAL = -np.pi / 2


@dataclass(frozen=True)
class TemplateResolution:
    """Element counts of the rotor and stator logical grids

    `rotor_columns` lists the half pole cells from the q-axis to the pole axis
    (bridge, outer slit, outer rib, magnet, inner rib, inner slit, post),
    `rotor_rows` the bands from the bore outward, `stator_columns` the
    (tooth half, slot, tooth half) cells of one slot and `stator_rows` the
    bands from the airgap outward.
    """

    rotor_columns: Tuple[int, ...] = (5, 4, 2, 8, 2, 6, 2)
    rotor_rows: Tuple[int, ...] = (3, 1, 3, 1)
    stator_columns: Tuple[int, ...] = (4, 4, 4)
    stator_rows: Tuple[int, ...] = (1, 1, 4, 2)

    def __post_init__(self):
        expected = (("rotor_columns", 7), ("rotor_rows", 4), ("stator_columns", 3), ("stator_rows", 4))
        for name, size in expected:
            counts = getattr(self, name)
            if len(counts) != size or any(int(c) < 1 for c in counts):
                raise ConfigError(f"{name} needs {size} positive element counts, got {counts}")

    @classmethod
    def coarse(cls) -> TemplateResolution:
        """Small preset for tests and quick runs"""
        return cls((1, 1, 1, 2, 1, 1, 1), (1, 1, 1, 1), (1, 1, 1), (1, 1, 2, 1))

    @classmethod
    def from_name(cls, name: str) -> TemplateResolution:
        """'default' or 'coarse'"""
        presets = {"default": cls, "coarse": cls.coarse}
        if name not in presets:
            raise ConfigError(f"unknown resolution '{name}', expected one of {sorted(presets)}")
        return presets[name]()

    @property
    def surface_points_per_half(self) -> int:
        """Offsetable surface control points of one half pole, the cell interiors (degree 2)"""
        return sum(self.rotor_columns)


@dataclass(frozen=True)
class RotorLayout:
    """Parameter dependent vertices of the half pole (meters and radians)

    `lower` and `upper` hold the strip vertices of columns 0..7: the q-axis cut,
    the outer slit end, the outer rib, both magnet ends, the inner slit start,
    the post line and the pole axis.
    """

    lower: FloatArray
    upper: FloatArray
    relief_base: FloatArray
    relief_control: FloatArray
    magnet_angle: float
    rotor_radius: float
    bore_radius: float

    @property
    def lower_angles(self) -> FloatArray:
        """Polar angles of the lower strip vertices"""
        return np.arctan2(self.lower[:, 1], self.lower[:, 0])

    @property
    def upper_angles(self) -> FloatArray:
        """Polar angles of the upper strip vertices"""
        return np.arctan2(self.upper[:, 1], self.upper[:, 0])


def _unit(angle: float) -> FloatArray:
    return np.array([np.cos(angle), np.sin(angle)])


def rotor_layout(params: ParameterSet) -> RotorLayout:
    """Strip vertices of the half pole below the pole axis

    The V apex sits on the pole axis at radius DMAG; each magnet arm leaves it at
    MA/2 from the axis. Along an arm the strip passes the post line (RW4/2 from
    the axis), the inner slit, the inner rib RW3, the MW1 x WMAG magnet, the
    outer rib RW2 and finally the outer slit, whose edges turn toward the q-axis
    cut at 180 deg - RA2 (upper, length LSLIT1) and 180 deg - RA1 (lower, length
    LSLIT2) from the cut normal.
    """
    si = params.si
    rotor_radius = si("RD1") / 2
    psi = si("MA") / 2
    half_post = si("RW4") / 2
    half_width = si("WMAG") / 2
    axis = _unit(POLE_AXIS)
    apex = si("DMAG") * axis
    arm = _unit(POLE_AXIS - psi)
    normal = _unit(POLE_AXIS + np.pi / 2 - psi)

    def point(s, t):
        return apex + s * arm + t * normal

    def on_post(t):
        return point((half_post + t * np.cos(psi)) / np.sin(psi), t)

    inner = half_post / np.sin(psi) + si("MT1")
    outer = inner + si("MW1")
    stations = (outer + si("RW2"), outer, inner, inner - si("RW3"))

    lower = np.zeros((8, 2))
    upper = np.zeros((8, 2))
    for column, s in zip(range(2, 6), stations):
        lower[column] = point(s, -half_width)
        upper[column] = point(s, half_width)
    lower[6] = on_post(-(half_width + si("DSLIT6")))
    upper[6] = on_post(half_width + si("DSLIT5"))
    upper[1] = upper[2] + si("LSLIT1") * _unit(CUT_NORMAL + np.pi - si("RA2"))
    lower[1] = lower[2] + si("LSLIT2") * _unit(CUT_NORMAL + np.pi - si("RA1"))
    lower[0] = [np.linalg.norm(lower[1]), 0.0]
    upper[0] = [np.linalg.norm(upper[1]), 0.0]
    lower[7] = (lower[6] @ axis) * axis
    upper[7] = (upper[6] @ axis) * axis

    return RotorLayout(
        lower=lower,
        upper=upper,
        relief_base=np.array([rotor_radius - si("RS"), 0.0]),
        relief_control=rotor_radius * _unit(si("RW5") / rotor_radius),
        magnet_angle=POLE_AXIS + np.pi / 2 - psi,
        rotor_radius=rotor_radius,
        bore_radius=si("RD2") / 2,
    )


def _mirror(points: FloatArray) -> FloatArray:
    return np.asarray(points)[..., ::-1]


def _arc_middle(radius: float, start: float, stop: float) -> Tuple[FloatArray, float]:
    half = 0.5 * (stop - start)
    return radius / np.cos(half) * _unit(start + half), float(np.cos(half))


@dataclass(frozen=True)
class _RowCurve:
    start: FloatArray
    middle: FloatArray
    stop: FloatArray
    weight: float = 1.0


def _line(start: FloatArray, stop: FloatArray) -> _RowCurve:
    return _RowCurve(start, 0.5 * (start + stop), stop, 1.0)


def _arc(radius: float, start: float, stop: float) -> _RowCurve:
    middle, weight = _arc_middle(radius, start, stop)
    return _RowCurve(radius * _unit(start), middle, radius * _unit(stop), weight)


_QUADRATIC = KnotVector.uniform(2, 1)


def ruled_patch(inner: _RowCurve, outer: _RowCurve) -> NurbsPatch:
    """Biquadratic patch ruled between two row curves, xi from `inner` to `outer`"""
    rows = []
    weights = []
    for curve in (inner, outer):
        rows.append(np.array([curve.start, curve.middle, curve.stop]))
        weights.append(np.array([1.0, curve.weight, 1.0]))
    homogeneous = [row * w[:, None] for row, w in zip(rows, weights)]
    middle_weights = 0.5 * (weights[0] + weights[1])
    middle = 0.5 * (homogeneous[0] + homogeneous[1]) / middle_weights[:, None]
    points = np.stack([rows[0], middle, rows[1]])
    basis = BasisFunctionSet(_QUADRATIC, _QUADRATIC, np.stack([weights[0], middle_weights, weights[1]]))
    return NurbsPatch(basis, points)


@dataclass
class _Cell:
    patch: NurbsPatch
    material: str
    side: str
    label: str
    region: object = None
    edge_tags: Dict[str, str] = field(default_factory=dict)


class MachineTemplate:
    """Builds the quarter machine from a parameter set

    The bore, rotor surface and airgap vertices sit at polar angles frozen from
    a reference parameter set, so the airgap trace and every NURBS weight stay
    independent of the design parameters.
    """

    def __init__(
        self,
        resolution: Optional[TemplateResolution] = None,
        reference: Optional[ParameterSet] = None,
        remanence: float = 1.0,
    ):
        self.resolution = resolution or TemplateResolution()
        self.reference = reference or ParameterSet.default()
        self.remanence = float(remanence)
        self.reference.validate()
        layout = rotor_layout(self.reference)
        self._bore_angles = np.concatenate([[0.0], layout.lower_angles[1:7], [POLE_AXIS]])
        self._surface_angles = np.concatenate([[0.0], layout.upper_angles[1:7], [POLE_AXIS]])
        for name, angles in (("bore", self._bore_angles), ("surface", self._surface_angles)):
            if np.any(np.diff(angles) <= 0):
                raise GeometryError(f"reference parameters give non-increasing {name} vertex angles")
        self._stator_cells = self._stator()

    def __repr__(self) -> str:
        return f"MachineTemplate(resolution={self.resolution}, remanence={self.remanence})"

    @property
    def rotor_radius(self) -> float:
        """R_s in meters"""
        return self.reference.si("RD1") / 2

    @property
    def airgap_radius(self) -> float:
        """Radius of the rotor-stator interface, midway through the air gap"""
        return 0.5 * (self.reference.si("RD1") + self.reference.si("SD2")) / 2

    def surface_angle(self, column: int) -> float:
        """Frozen polar angle of a rotor surface vertex column (0..7)"""
        return float(self._surface_angles[column])

    def build(self, params: ParameterSet) -> MultiPatchGeometry:
        """Quarter machine geometry for a parameter set

        Raises
        ------
        NumericIntervalError
            if a parameter lies outside its bounds
        GeometryError
            if the strip vertices are out of order or a patch is inverted
        """
        params.validate()
        self._check_fixed(params)
        layout = rotor_layout(params)
        cells = self._rotor(layout) + self._stator_cells
        records = [
            PatchRecord(cell.patch, cell.material, cell.side, cell.region, cell.edge_tags, cell.label)  # type: ignore
            for cell in cells
        ]
        geometry = MultiPatchGeometry.from_records(records, period=np.pi / 2, symmetry_factor=4)
        geometry.check_jacobians()
        geometry.metadata.update(self._metadata(geometry))
        geometry.metadata["airgap_radius"] = self.airgap_radius
        geometry.metadata["pole_pairs"] = 2
        return geometry

    def _check_fixed(self, params: ParameterSet) -> None:
        for name in ("RD1", "RD2", "SD1", "SD2", "ST", "SW1", "SW2", "SW4"):
            if params[name] != self.reference[name]:
                raise ConfigError(f"fixed parameter {name} differs from the template reference")

    def _rotor(self, layout: RotorLayout) -> List[_Cell]:
        lower_angles = layout.lower_angles
        upper_angles = layout.upper_angles
        for name, angles in (("lower", lower_angles), ("upper", upper_angles)):
            bad = np.flatnonzero(np.diff(angles) <= 0)
            if bad.size:
                raise GeometryError(
                    f"rotor strip {name} edge folds back between columns {bad[0]} and {bad[0] + 1}"
                )

        radius = layout.rotor_radius
        airgap = self.airgap_radius
        # half pole vertex grid (column, row)
        half = np.zeros((8, 5, 2))
        half[:, 0] = layout.bore_radius * np.stack([_unit(a) for a in self._bore_angles])
        half[:, 1] = layout.lower
        half[:, 2] = layout.upper
        half[:, 3] = radius * np.stack([_unit(a) for a in self._surface_angles])
        half[0, 3] = layout.relief_base
        half[:, 4] = airgap * np.stack([_unit(a) for a in self._surface_angles])

        grid = np.concatenate([half, _mirror(half[-2::-1])])
        angles = {0: self._bore_angles, 3: self._surface_angles, 4: self._surface_angles}
        radii = {0: layout.bore_radius, 3: radius, 4: airgap}
        n_cells = grid.shape[0] - 1

        def row_curve(row: int, column: int) -> _RowCurve:
            start, stop = grid[column, row], grid[column + 1, row]
            if row == 3 and column in (0, n_cells - 1):
                control = layout.relief_control if column == 0 else _mirror(layout.relief_control)
                return _RowCurve(start, control, stop, 1.0)
            if row in angles:
                if column < 7:
                    a0, a1 = angles[row][column], angles[row][column + 1]
                else:
                    a0, a1 = np.pi / 2 - angles[row][14 - column], np.pi / 2 - angles[row][13 - column]
                curve = _arc(radii[row], a0, a1)
                return _RowCurve(start, curve.middle, stop, curve.weight)
            return _line(start, stop)

        columns = self.resolution.rotor_columns
        rows = self.resolution.rotor_rows
        alpha = layout.magnet_angle
        magnets = {3: MagnetSpec(self.remanence, alpha), n_cells - 4: MagnetSpec(self.remanence, np.pi / 2 - alpha)}

        cells: List[_Cell] = []
        for band in range(4):
            for column in range(n_cells):
                position = column if column < 7 else n_cells - 1 - column
                coarse = ruled_patch(row_curve(band, column), row_curve(band + 1, column))
                patch = uniform_refine(coarse, rows[band], columns[position])
                if band == 1:
                    material = HALF_POLE_MATERIALS[position]
                elif band == 3:
                    material = "air"
                else:
                    material = "iron"
                tags: Dict[str, str] = {}
                if band == 0:
                    tags["west"] = "dirichlet"
                if band == 3:
                    tags["east"] = "airgap"
                if column == 0:
                    tags["south"] = "antiperiodic"
                if column == n_cells - 1:
                    tags["north"] = "antiperiodic"
                region = magnets.get(column) if band == 1 else None
                label = f"rotor/{ROTOR_BANDS[band]}/{HALF_POLE_LABELS[position]}/{column}"
                cells.append(_Cell(patch, material, "rotor", label, region, tags))
        return cells

    def _stator(self) -> List[_Cell]:
        reference = self.reference
        bore = reference.si("SD2") / 2
        radii = (
            self.airgap_radius,
            bore,
            bore + reference.si("ST"),
            bore + reference.si("ST") + reference.si("SW4"),
            reference.si("SD1") / 2,
        )
        opening = reference.si("SW2") / 2
        slot = reference.si("SW1") / 2

        # slot sides: the opening half width reaches rows 0..1, the slot half width rows 2..4
        angles = np.zeros((3 * STATOR_SLOTS + 1, 5))
        for k in range(STATOR_SLOTS):
            center = (k + 0.5) * SLOT_PITCH
            angles[3 * k] = k * SLOT_PITCH
            for row in range(5):
                width, reach = (opening, radii[1]) if row < 2 else (slot, radii[min(row, 3)])
                delta = np.arcsin(width / reach)
                angles[3 * k + 1, row] = center - delta
                angles[3 * k + 2, row] = center + delta
        angles[-1] = STATOR_SLOTS * SLOT_PITCH

        def vertex(column: int, row: int) -> FloatArray:
            return radii[row] * _unit(angles[column, row])

        columns = self.resolution.stator_columns
        rows = self.resolution.stator_rows
        cells: List[_Cell] = []
        for band in range(4):
            for column in range(3 * STATOR_SLOTS):
                kind = column % 3
                k = column // 3
                inner = _arc(radii[band], angles[column, band], angles[column + 1, band])
                outer = _arc(radii[band + 1], angles[column, band + 1], angles[column + 1, band + 1])
                inner = _RowCurve(vertex(column, band), inner.middle, vertex(column + 1, band), inner.weight)
                outer = _RowCurve(
                    vertex(column, band + 1), outer.middle, vertex(column + 1, band + 1), outer.weight
                )
                patch = uniform_refine(ruled_patch(inner, outer), rows[band], columns[kind])
                region = None
                if band == 0:
                    material = "air"
                elif band == 3:
                    material = "iron"
                elif kind != 1:
                    material = "iron"
                elif band == 1:
                    material = "air"
                else:
                    material = "copper"
                    phase, sign = WINDING[k]
                    region = ExcitationSpec(phase, sign, k)
                tags: Dict[str, str] = {}
                if band == 0:
                    tags["west"] = "airgap"
                if band == 3:
                    tags["east"] = "dirichlet"
                if column == 0:
                    tags["south"] = "antiperiodic"
                if column == 3 * STATOR_SLOTS - 1:
                    tags["north"] = "antiperiodic"
                label = f"stator/{STATOR_BANDS[band]}/{('tooth', 'slot', 'tooth')[kind]}/{column}"
                cells.append(_Cell(patch, material, "stator", label, region, tags))
        return cells

    def _metadata(self, geometry: MultiPatchGeometry) -> Dict[str, object]:
        """Surface control points open to radial offsets, ordered by polar angle

        Only cell interior points move; the cell corners stay on the template.
        """
        n_cells = 14
        ids: List[int] = []
        for column in range(n_cells):
            index = 2 * n_cells + column
            edge = geometry.global_ids[index].ravel()[geometry.patches[index].edge_local_indices("east")]
            ids.extend(edge[1:-1].tolist())
        unique = np.array(sorted(set(ids)), dtype=np.int64)

        points = geometry.control_points()[unique]
        angles = np.arctan2(points[:, 1], points[:, 0])
        order = np.argsort(angles)
        unique, points, angles = unique[order], points[order], angles[order]

        distance, mirror = cKDTree(points).query(_mirror(points))
        if np.any(distance > 1e-9):
            raise GeometryError("rotor surface control points are not mirror symmetric about the pole axis")

        magnets = [i for i, record in enumerate(geometry.records) if isinstance(record.region, MagnetSpec)]
        coils = [i for i, record in enumerate(geometry.records) if isinstance(record.region, ExcitationSpec)]
        # d alpha / d MA: the arm below the pole axis turns against MA, its mirror image with it
        rates = {i: (-0.5 if geometry.records[i].region.angle > POLE_AXIS else 0.5) for i in magnets}  # type: ignore
        return {
            "surface_ids": unique,
            "surface_angles": angles,
            "surface_mirror": mirror.astype(np.int64),
            "magnet_patches": magnets,
            "magnet_angle_rates": rates,
            "coil_patches": coils,
        }


def build_geometry(params: ParameterSet, template: Optional[MachineTemplate] = None) -> MultiPatchGeometry:
    """Quarter machine geometry for a parameter set, see `MachineTemplate.build`"""
    return (template or MachineTemplate()).build(params)

