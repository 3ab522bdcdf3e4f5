"""Named machine parameters, bounds and the scaled design vector"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from isomotor._serialization import JsonSerializer
from isomotor._settings import settings
from isomotor.common.exceptions import ConfigError, NumericIntervalError
from isomotor.common.types import FloatArray
from isomotor.common.validators import IntervalValidator, NameValidator

__all__ = [
    "FREE_PARAMETERS",
    "FIXED_PARAMETERS",
    "ParameterSpec",
    "ParameterSet",
    "DesignSpace",
    "DesignVector",
]

logger = logging.getLogger(__name__)

Unit = Literal["mm", "deg"]

FREE_PARAMETERS: Tuple[str, ...] = (
    "DMAG",
    "DSLIT5",
    "DSLIT6",
    "LSLIT1",
    "LSLIT2",
    "MA",
    "MT1",
    "MW1",
    "OPERATING_ANGLE",
    "RA1",
    "RA2",
    "RS",
    "RW2",
    "RW3",
    "RW4",
    "RW5",
    "WMAG",
)
FIXED_PARAMETERS: Tuple[str, ...] = ("LENGTH", "RD1", "RD2", "RF", "SD1", "SD2", "ST", "SW1", "SW2", "SW4")

ANGLE_PARAMETERS = frozenset({"MA", "OPERATING_ANGLE", "RA1", "RA2"})

_SI_FACTOR = {"mm": 1e-3, "deg": np.pi / 180.0}
# relative tolerance within which decoded values snap onto their bounds
BOUND_SNAP = 1e-9


@dataclass(frozen=True)
class ParameterSpec:
    """One named parameter in native units, free when it carries bounds"""

    name: str
    value: float
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    unit: Unit = "mm"

    def __post_init__(self):
        NameValidator().validate(self.name)
        if (self.minimum is None) != (self.maximum is None):
            raise ConfigError(f"parameter {self.name} needs both bounds or none")
        if self.minimum is not None and not self.minimum < self.maximum:  # type: ignore
            raise ConfigError(f"parameter {self.name} has an empty range [{self.minimum}, {self.maximum}]")

    @property
    def is_free(self) -> bool:
        """True for design parameters"""
        return self.minimum is not None

    @property
    def factor(self) -> float:
        """Native to SI conversion factor"""
        return _SI_FACTOR[self.unit]

    def validate(self) -> None:
        """Check the value against the bounds

        Raises
        ------
        NumericIntervalError
            if a free parameter lies outside its bounds
        """
        if self.is_free:
            IntervalValidator(self.minimum, self.maximum, self.name).validate(self.value)  # type: ignore

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"value": self.value, "unit": self.unit}
        if self.is_free:
            data["min"] = self.minimum
            data["max"] = self.maximum
        return data


class ParameterSet(JsonSerializer):
    """Ordered collection of machine parameters"""

    def __init__(self, specs: Sequence[ParameterSpec]):
        """Parameter table

        Parameters
        ----------
        specs : Sequence[ParameterSpec]
            every free and fixed parameter of the template

        Raises
        ------
        ConfigError
            if a template parameter is missing or free/fixed roles are swapped
        """
        self._specs: Dict[str, ParameterSpec] = {spec.name: spec for spec in specs}
        missing = [name for name in FREE_PARAMETERS + FIXED_PARAMETERS if name not in self._specs]
        if missing:
            raise ConfigError(f"missing parameters: {', '.join(missing)}")
        for name in FREE_PARAMETERS:
            if not self._specs[name].is_free:
                raise ConfigError(f"parameter {name} must carry bounds")

    @classmethod
    def default(cls) -> ParameterSet:
        """The bundled template table"""
        return cls.from_dict(_bundled_geometry())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ParameterSet:
        """Parameters from `{"NAME": {"value": .., "unit": .., "min": .., "max": ..}}`"""
        specs = []
        for name, entry in data.items():
            if isinstance(entry, (int, float)):
                entry = {"value": entry}
            unit = entry.get("unit", "deg" if name in ANGLE_PARAMETERS else "mm")
            if unit not in _SI_FACTOR:
                raise ConfigError(f"unknown unit '{unit}' for parameter {name}")
            specs.append(ParameterSpec(name, float(entry["value"]), entry.get("min"), entry.get("max"), unit))
        return cls(specs)

    def to_dict(self) -> Dict[str, Any]:
        return {name: spec.to_dict() for name, spec in self._specs.items()}

    def __getitem__(self, name: str) -> float:
        return self._specs[name].value

    def __iter__(self) -> Iterator[str]:
        return iter(self._specs)

    def __len__(self) -> int:
        return len(self._specs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParameterSet):
            return NotImplemented
        return self._specs == other._specs

    def __repr__(self) -> str:
        return f"ParameterSet({', '.join(f'{n}={self[n]:g}' for n in FREE_PARAMETERS)})"

    def spec(self, name: str) -> ParameterSpec:
        """Value, bounds and unit of one parameter"""
        return self._specs[name]

    def si(self, name: str) -> float:
        """Value in meters or radians"""
        spec = self._specs[name]
        return spec.value * spec.factor

    @property
    def free_names(self) -> Tuple[str, ...]:
        """Names of the design parameters in table order"""
        return FREE_PARAMETERS

    def validate(self) -> None:
        """Check every free parameter against its bounds

        Raises
        ------
        NumericIntervalError
            naming the first parameter out of bounds
        """
        for name in FREE_PARAMETERS:
            self._specs[name].validate()

    def with_values(self, values: Mapping[str, float]) -> ParameterSet:
        """Copy with new native values"""
        specs = []
        for name, spec in self._specs.items():
            if name in values:
                spec = ParameterSpec(name, float(values[name]), spec.minimum, spec.maximum, spec.unit)
            specs.append(spec)
        return ParameterSet(specs)

    def with_si_values(self, values: Mapping[str, float]) -> ParameterSet:
        """Copy with new values given in SI units"""
        return self.with_values({name: value / self._specs[name].factor for name, value in values.items()})

    def bounds_si(self) -> Tuple[FloatArray, FloatArray]:
        """Lower and upper bounds of the free parameters in SI units"""
        lower = np.array([self._specs[n].minimum * self._specs[n].factor for n in FREE_PARAMETERS])  # type: ignore
        upper = np.array([self._specs[n].maximum * self._specs[n].factor for n in FREE_PARAMETERS])  # type: ignore
        return lower, upper

    def values_si(self) -> FloatArray:
        """Free parameter values in SI units"""
        return np.array([self.si(name) for name in FREE_PARAMETERS])


@lru_cache(maxsize=1)
def _bundled_geometry() -> Dict[str, Any]:
    with open(settings.find_data_file("default_config.json"), "r", encoding="utf-8") as fio:
        return json.load(fio)["geometry"]


class DesignSpace:
    """Affine map between physical design values and the unit box

    The design vector lists the 17 free parameters followed by the offset design
    values (29 when mirrored pairs share a value, 58 otherwise).
    """

    def __init__(
        self,
        parameters: ParameterSet,
        n_offsets: int,
        offset_bounds: Tuple[float, float] = (-1.5e-3, 0.25e-3),
    ):
        if not offset_bounds[0] < offset_bounds[1]:
            raise ConfigError(f"empty offset bounds {offset_bounds}")
        if offset_bounds[0] < -1.5e-3 or offset_bounds[1] > 1.5e-3:
            raise ConfigError("offsets are limited to 1.5 mm in magnitude")
        self.parameters = parameters
        self.n_offsets = int(n_offsets)
        self.offset_bounds = (float(offset_bounds[0]), float(offset_bounds[1]))
        lower, upper = parameters.bounds_si()
        self.lower = np.concatenate([lower, np.full(self.n_offsets, self.offset_bounds[0])])
        self.upper = np.concatenate([upper, np.full(self.n_offsets, self.offset_bounds[1])])

    @property
    def n_parameters(self) -> int:
        """Number of parameter coordinates"""
        return len(FREE_PARAMETERS)

    @property
    def size(self) -> int:
        """Length of the design vector"""
        return self.n_parameters + self.n_offsets

    @property
    def ranges(self) -> FloatArray:
        """max - min per coordinate in SI units"""
        return self.upper - self.lower

    @property
    def names(self) -> List[str]:
        """Coordinate names, offsets are called DC00, DC01, ..."""
        return list(FREE_PARAMETERS) + [f"DC{i:02d}" for i in range(self.n_offsets)]

    def parameter_slice(self) -> slice:
        """Parameter coordinates"""
        return slice(0, self.n_parameters)

    def offset_slice(self) -> slice:
        """Offset coordinates"""
        return slice(self.n_parameters, self.size)

    def to_unit(self, values: FloatArray) -> FloatArray:
        """x = (v - min) / (max - min)"""
        return (np.asarray(values, dtype=float) - self.lower) / self.ranges

    def from_unit(self, x: FloatArray) -> FloatArray:
        """v = min + x (max - min)"""
        return self.lower + np.asarray(x, dtype=float) * self.ranges

    def compose(self, parameters: ParameterSet, offsets: Optional[FloatArray] = None) -> DesignVector:
        """Design vector from parameters and offset design values in meters"""
        offsets = np.zeros(self.n_offsets) if offsets is None else np.asarray(offsets, dtype=float)
        if offsets.shape != (self.n_offsets,):
            raise ValueError(f"expected {self.n_offsets} offset values, got {offsets.shape}")
        values = np.concatenate([parameters.values_si(), offsets])
        return DesignVector(self.to_unit(values), self)

    def parameters_from(self, x: FloatArray) -> ParameterSet:
        """Parameter set encoded in x"""
        values = self.from_unit(x)[self.parameter_slice()]
        native = {}
        for name, value in zip(FREE_PARAMETERS, values):
            spec = self.parameters.spec(name)
            value = value / spec.factor
            # round-off at the box faces must not leave the parameter bounds
            slack = BOUND_SNAP * (spec.maximum - spec.minimum)  # type: ignore
            if spec.minimum - slack <= value < spec.minimum:  # type: ignore
                value = spec.minimum
            elif spec.maximum < value <= spec.maximum + slack:  # type: ignore
                value = spec.maximum
            native[name] = float(value)  # type: ignore
        return self.parameters.with_values(native)

    def offsets_from(self, x: FloatArray) -> FloatArray:
        """Offset design values in meters encoded in x"""
        return self.from_unit(x)[self.offset_slice()]


class DesignVector:
    """Point of the unit box [0,1]^d together with its design space"""

    def __init__(self, x: FloatArray, space: DesignSpace, clip: bool = False):
        """Scaled design

        Parameters
        ----------
        x : FloatArray
            scaled coordinates
        space : DesignSpace
            scaling
        clip : bool, optional
            project onto the box instead of rejecting, by default False

        Raises
        ------
        NumericIntervalError
            if a coordinate lies outside [0,1] and clipping is off
        """
        x = np.array(x, dtype=float)
        if x.shape != (space.size,):
            raise ValueError(f"design vector must have {space.size} entries, got {x.shape}")
        outside = np.flatnonzero((x < 0.0) | (x > 1.0))
        if outside.size:
            if not clip:
                name = space.names[outside[0]]
                raise NumericIntervalError(f"design coordinate {name} ({x[outside[0]]}) is outside [0, 1]")
            logger.warning("Clipped %d design coordinates into [0, 1]", outside.size)
            x = np.clip(x, 0.0, 1.0)
        x.setflags(write=False)
        self.x = x
        self.space = space

    def __repr__(self) -> str:
        return f"DesignVector(size={self.x.size})"

    @property
    def parameters(self) -> ParameterSet:
        """Decoded parameter set"""
        return self.space.parameters_from(self.x)

    @property
    def offsets(self) -> FloatArray:
        """Decoded offset design values in meters"""
        return self.space.offsets_from(self.x)
