"""Run configuration and the reloadable design file"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from isomotor._serialization import JsonSerializer
from isomotor._settings import settings
from isomotor.assembly import ExcitationState, harmonic_set, max_admissible_harmonic
from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray
from isomotor.common.validators import ExistingFileValidator, PositiveValidator
from isomotor.geometry import (
    ControlPointOffsets,
    DesignSpace,
    DesignVector,
    MachineTemplate,
    ParameterSet,
    TemplateResolution,
)
from isomotor.materials import MaterialLibrary
from isomotor.optimize import DesignProblem, OptimizationConfig
from isomotor.solver import angle_range

__all__ = [
    "MaterialOptions",
    "ExcitationOptions",
    "Discretization",
    "RunConfig",
    "DesignFile",
    "parse_angles",
    "merged_angles",
]

logger = logging.getLogger(__name__)


def parse_angles(text: str) -> FloatArray:
    """Angles in radians from 'start:stop:step' or a comma list, both in degrees

    Raises
    ------
    ConfigError
        on malformed text
    """
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            return angle_range(start, stop, step)
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot read angles from '{text}'") from exc
    if not values:
        raise ConfigError("empty angle list")
    return np.deg2rad(values)


@dataclass(frozen=True)
class MaterialOptions:
    """Iron model, magnet permeability and remanence"""

    bh_curve: Optional[str] = "m27.csv"
    iron_permeability: Optional[float] = None
    magnet_permeability: float = 1.05
    remanence: float = 1.0

    def library(self) -> MaterialLibrary:
        """Reluctivity models"""
        return MaterialLibrary.from_options(self.bh_curve, self.iron_permeability, self.magnet_permeability)


@dataclass(frozen=True)
class ExcitationOptions:
    """Three-phase supply, the phase reference in degrees"""

    current: float = 3.0
    turns: int = 35
    pole_pairs: int = 2
    coil_area: Optional[float] = None
    phase_reference_deg: float = 0.0

    def state(self) -> ExcitationState:
        """Supply at beta = 0 without the operating angle"""
        return ExcitationState(0.0, 0.0, self.current, self.turns, self.pole_pairs, self.coil_area)


@dataclass(frozen=True)
class Discretization:
    """Template resolution, harmonic cap and quadrature"""

    resolution: str = "default"
    max_harmonic: Optional[int] = None
    extra_quadrature_points: int = 0

    def __post_init__(self):
        TemplateResolution.from_name(self.resolution)
        if self.max_harmonic is not None:
            PositiveValidator("max_harmonic").validate(self.max_harmonic)


def _section(data: Dict[str, Any], name: str, kind):
    try:
        return kind(**data.get(name, {}))
    except TypeError as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


@lru_cache(maxsize=1)
def _bundled_config() -> Dict[str, Any]:
    with open(settings.find_data_file("default_config.json"), "r", encoding="utf-8") as fio:
        return json.load(fio)


@dataclass
class RunConfig(JsonSerializer):
    """Everything a command needs, lengths in mm and angles in degrees on file"""

    parameters: ParameterSet
    materials: MaterialOptions = field(default_factory=MaterialOptions)
    excitation: ExcitationOptions = field(default_factory=ExcitationOptions)
    discretization: Discretization = field(default_factory=Discretization)
    angles_deg: Union[Dict[str, float], List[float]] = field(
        default_factory=lambda: {"start": 0.0, "stop": 30.0, "step": 1.0}
    )
    field_grid: Tuple[int, int] = (5, 5)
    optimization: OptimizationConfig = field(default_factory=OptimizationConfig)
    output: str = "results"

    @classmethod
    def default(cls) -> RunConfig:
        """The bundled configuration"""
        return cls.from_dict(_bundled_config())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunConfig:
        if "geometry" not in data:
            raise ConfigError("configuration needs a 'geometry' section")
        config = cls(
            parameters=ParameterSet.from_dict(data["geometry"]),
            materials=_section(data, "materials", MaterialOptions),
            excitation=_section(data, "excitation", ExcitationOptions),
            discretization=_section(data, "discretization", Discretization),
            angles_deg=data.get("angles_deg", {"start": 0.0, "stop": 30.0, "step": 1.0}),
            field_grid=tuple(data.get("field_grid", (5, 5))),  # type: ignore
            optimization=OptimizationConfig.from_dict(data.get("optimization", {})),
            output=str(data.get("output", "results")),
        )
        config.angles()
        return config

    @classmethod
    def load_json(cls, file_path: Union[str, Path]) -> RunConfig:
        ExistingFileValidator().validate(file_path)
        try:
            return super().load_json(file_path)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {file_path}: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "geometry": self.parameters.to_dict(),
            "materials": asdict(self.materials),
            "excitation": asdict(self.excitation),
            "discretization": asdict(self.discretization),
            "angles_deg": self.angles_deg,
            "field_grid": list(self.field_grid),
            "optimization": self.optimization.to_dict(),
            "output": self.output,
        }

    def angles(self) -> FloatArray:
        """Rotor angles in radians"""
        if isinstance(self.angles_deg, dict):
            try:
                return angle_range(self.angles_deg["start"], self.angles_deg["stop"], self.angles_deg["step"])
            except KeyError as exc:
                raise ConfigError(f"angle range misses {exc}") from exc
        if not self.angles_deg:
            raise ConfigError("empty angle list")
        return np.deg2rad(np.asarray(self.angles_deg, dtype=float))

    def with_angles(self, angles: FloatArray) -> RunConfig:
        """Copy with an explicit angle list"""
        return replace(self, angles_deg=[float(a) for a in np.rad2deg(angles)])

    def template(self, reference: Optional[ParameterSet] = None) -> MachineTemplate:
        """Parametric template, its frozen angles taken from `reference` or the configured parameters"""
        resolution = TemplateResolution.from_name(self.discretization.resolution)
        return MachineTemplate(resolution, reference or self.parameters, self.materials.remanence)

    def problem(
        self,
        reference: Optional[ParameterSet] = None,
        threads: Optional[int] = None,
        symmetric: Optional[bool] = None,
        warm_start: bool = True,
    ) -> DesignProblem:
        """Design problem of this configuration"""
        template = self.template(reference)
        symmetric = self.optimization.symmetric_offsets if symmetric is None else symmetric
        geometry = template.build(template.reference)
        layout = ControlPointOffsets.from_geometry(geometry, symmetric)
        space = DesignSpace(template.reference, layout.n_design, self.optimization.offset_bounds)
        cap = self.discretization.max_harmonic
        if cap is None:
            cap = max_admissible_harmonic(geometry)
        return DesignProblem(
            template,
            self.materials.library(),
            space,
            layout,
            self.angles(),
            self.excitation.state(),
            np.deg2rad(self.excitation.phase_reference_deg),
            harmonic_set(cap, geometry.period),
            self.discretization.extra_quadrature_points,
            threads,
            warm_start,
        )


@dataclass
class DesignFile(JsonSerializer):
    """Reloadable design: parameters, template reference and physical offsets in mm"""

    parameters: ParameterSet
    reference: ParameterSet
    offsets_mm: List[float]
    symmetric: bool = True

    @classmethod
    def from_design(cls, x: DesignVector, problem: DesignProblem) -> DesignFile:
        """Design file of a design vector"""
        offsets = problem.physical_offsets(x) * 1e3
        return cls(x.parameters, problem.template.reference, [float(v) for v in offsets], problem.layout.symmetric)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DesignFile:
        try:
            return cls(
                ParameterSet.from_dict(data["parameters"]),
                ParameterSet.from_dict(data["reference"]),
                [float(v) for v in data["offsets_mm"]],
                bool(data.get("symmetric", True)),
            )
        except KeyError as exc:
            raise ConfigError(f"design file misses {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "parameters": self.parameters.to_dict(),
            "reference": self.reference.to_dict(),
            "offsets_mm": list(self.offsets_mm),
            "symmetric": self.symmetric,
        }

    def design_vector(self, problem: DesignProblem) -> DesignVector:
        """Design vector in the problem's space

        Raises
        ------
        ConfigError
            if the offsets do not fit the problem's layout
        """
        offsets = np.asarray(self.offsets_mm, dtype=float) * 1e-3
        if offsets.shape != (problem.layout.n_physical,):
            raise ConfigError(f"design file has {offsets.size} offsets, the template {problem.layout.n_physical}")
        return problem.space.compose(self.parameters, problem.layout.to_design(offsets))

    def apply(self, config: RunConfig) -> RunConfig:
        """Run configuration evaluating this design"""
        optimization = replace(config.optimization, symmetric_offsets=self.symmetric)
        return replace(config, parameters=self.parameters, optimization=optimization)


def merged_angles(config: RunConfig, text: Optional[str]) -> RunConfig:
    """Apply an --angles override"""
    return config if text is None else config.with_angles(parse_angles(text))
