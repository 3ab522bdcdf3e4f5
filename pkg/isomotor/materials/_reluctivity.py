"""Reluctivity models nu(B) for linear media and BH curves"""

from __future__ import annotations

import logging
from abc import abstractmethod
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from isomotor._settings import settings
from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray
from isomotor.common.validators import PositiveValidator

__all__ = [
    "MU0",
    "NU0",
    "ReluctivityModel",
    "LinearReluctivity",
    "CurveReluctivity",
    "nu",
    "dnu_dB",
    "load_bh_csv",
    "MaterialLibrary",
]

logger = logging.getLogger(__name__)

MU0 = 4e-7 * np.pi
NU0 = 1.0 / MU0

BH_COLUMNS = ("B_tesla", "H_A_per_m")


class ReluctivityModel:
    """Base of every reluctivity model, subclasses register themselves by kind"""

    _subclasses: Dict[str, type] = {}
    kind = "base"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls._subclasses[cls.kind] = cls

    @property
    def is_linear(self) -> bool:
        """True when nu does not depend on B"""
        return False

    @abstractmethod
    def nu(self, flux_density: FloatArray) -> FloatArray:
        """Reluctivity at |B| in m/H"""

    @abstractmethod
    def dnu_dB(self, flux_density: FloatArray) -> FloatArray:
        """Derivative of the reluctivity with respect to |B|"""


class LinearReluctivity(ReluctivityModel):
    """Constant reluctivity"""

    kind = "linear"

    def __init__(self, value: float, name: str = "linear"):
        PositiveValidator("reluctivity").validate(value)
        self.value = float(value)
        self.name = name

    @classmethod
    def from_relative_permeability(cls, mu_r: float, name: str = "linear") -> LinearReluctivity:
        """nu = 1 / (mu_r mu_0)"""
        PositiveValidator("relative permeability").validate(mu_r)
        return cls(1.0 / (mu_r * MU0), name)

    @property
    def is_linear(self) -> bool:
        return True

    def __repr__(self) -> str:
        return f"LinearReluctivity({self.value:.6e}, name='{self.name}')"

    def nu(self, flux_density: FloatArray) -> FloatArray:
        return np.full(np.shape(flux_density), self.value)

    def dnu_dB(self, flux_density: FloatArray) -> FloatArray:
        return np.zeros(np.shape(flux_density))


class CurveReluctivity(ReluctivityModel):
    """Monotone C1 interpolant of H(B) with vacuum extrapolation beyond the last sample"""

    kind = "curve"

    def __init__(self, flux_density: FloatArray, field_strength: FloatArray, name: str = "curve"):
        """Reluctivity from BH samples

        Parameters
        ----------
        flux_density : FloatArray
            strictly increasing B samples in tesla, the first one is 0
        field_strength : FloatArray
            strictly increasing H samples in A/m, the first one is 0
        name : str, optional
            material name, by default "curve"

        Raises
        ------
        ConfigError
            if the samples are not strictly increasing from the origin or the
            vacuum slope cannot be joined monotonically
        """
        b = np.asarray(flux_density, dtype=float)
        h = np.asarray(field_strength, dtype=float)
        if b.ndim != 1 or b.shape != h.shape or b.size < 3:
            raise ConfigError("a BH curve needs at least three (B, H) rows")
        if b[0] != 0.0 or h[0] != 0.0:
            raise ConfigError("a BH curve must start at B = 0, H = 0")
        if np.any(np.diff(b) <= 0) or np.any(np.diff(h) <= 0):
            raise ConfigError("BH samples must be strictly increasing")

        slopes = PchipInterpolator(b, h).derivative()(b)
        last_secant = (h[-1] - h[-2]) / (b[-1] - b[-2])
        if NU0 > 3.0 * last_secant:
            raise ConfigError(
                f"last BH segment is too flat ({last_secant:.3e} A/m/T) to join the vacuum slope monotonically"
            )
        slopes[-1] = NU0

        self.name = name
        self._b = b
        self._h = h
        self._spline = CubicHermiteSpline(b, h, slopes)
        self._slope = self._spline.derivative()
        # H = c0 B^3 + c1 B^2 + c2 B on the first segment
        self._origin = self._spline.c[:3, 0].copy()

    def __repr__(self) -> str:
        return f"CurveReluctivity(name='{self.name}', samples={self._b.size})"

    @property
    def samples(self) -> Tuple[FloatArray, FloatArray]:
        """(B, H) samples"""
        return self._b, self._h

    def field_strength(self, flux_density: FloatArray) -> FloatArray:
        """H(B) including the vacuum extrapolation"""
        b = np.asarray(flux_density, dtype=float)
        beyond = b > self._b[-1]
        inside = np.clip(b, 0.0, self._b[-1])
        return np.where(beyond, self._h[-1] + NU0 * (b - self._b[-1]), self._spline(inside))

    def differential(self, flux_density: FloatArray) -> FloatArray:
        """dH/dB including the vacuum extrapolation"""
        b = np.asarray(flux_density, dtype=float)
        inside = np.clip(b, 0.0, self._b[-1])
        return np.where(b > self._b[-1], NU0, self._slope(inside))

    def nu(self, flux_density: FloatArray) -> FloatArray:
        b = np.asarray(flux_density, dtype=float)
        c0, c1, c2 = self._origin
        near_origin = c0 * b**2 + c1 * b + c2
        safe = np.where(b > 0.0, b, 1.0)
        return np.where(b < self._b[1], near_origin, self.field_strength(b) / safe)

    def dnu_dB(self, flux_density: FloatArray) -> FloatArray:
        b = np.asarray(flux_density, dtype=float)
        c0, c1, _ = self._origin
        near_origin = 2.0 * c0 * b + c1
        safe = np.where(b > 0.0, b, 1.0)
        return np.where(b < self._b[1], near_origin, (self.differential(b) - self.nu(b)) / safe)

    @classmethod
    def from_csv(cls, file_path: Union[str, Path], name: Optional[str] = None) -> CurveReluctivity:
        """Load a `B_tesla,H_A_per_m` CSV, bundled names such as 'm27.csv' are resolved too"""
        path = settings.find_data_file(file_path)
        b, h = load_bh_csv(path)
        return cls(b, h, name or path.stem)


def nu(model: ReluctivityModel, flux_density: FloatArray) -> FloatArray:
    """Reluctivity of a model at |B| >= 0"""
    return model.nu(flux_density)


def dnu_dB(model: ReluctivityModel, flux_density: FloatArray) -> FloatArray:
    """Derivative of the reluctivity of a model at |B| >= 0"""
    return model.dnu_dB(flux_density)


def load_bh_csv(file_path: Union[str, Path]) -> Tuple[FloatArray, FloatArray]:
    """Read BH samples from a headed two column CSV

    Raises
    ------
    ConfigError
        on a missing or wrong header or unparsable rows
    """
    try:
        table = np.genfromtxt(file_path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"could not read BH curve '{file_path}': {exc}") from exc
    if table.dtype.names != BH_COLUMNS:
        raise ConfigError(f"BH curve '{file_path}' must have the header {','.join(BH_COLUMNS)}")
    table = np.atleast_1d(table)
    b, h = table["B_tesla"], table["H_A_per_m"]
    if np.any(np.isnan(b)) or np.any(np.isnan(h)):
        raise ConfigError(f"BH curve '{file_path}' has unparsable rows")
    return np.asarray(b, dtype=float), np.asarray(h, dtype=float)


class MaterialLibrary:
    """Reluctivity models by material name"""

    def __init__(
        self,
        iron: ReluctivityModel,
        magnet_permeability: float = 1.05,
        air: Optional[ReluctivityModel] = None,
        copper: Optional[ReluctivityModel] = None,
    ):
        self.models: Dict[str, ReluctivityModel] = {
            "iron": iron,
            "magnet": LinearReluctivity.from_relative_permeability(magnet_permeability, "magnet"),
            "air": air or LinearReluctivity(NU0, "air"),
            "copper": copper or LinearReluctivity(NU0, "copper"),
        }

    @classmethod
    def from_options(
        cls,
        bh_curve: Optional[Union[str, Path]] = "m27.csv",
        iron_permeability: Optional[float] = None,
        magnet_permeability: float = 1.05,
    ) -> MaterialLibrary:
        """Nonlinear iron from a BH curve, or linear iron when a relative permeability is given"""
        if iron_permeability is not None:
            iron: ReluctivityModel = LinearReluctivity.from_relative_permeability(iron_permeability, "iron")
        elif bh_curve is not None:
            try:
                iron = CurveReluctivity.from_csv(bh_curve, "iron")
            except FileNotFoundError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            raise ConfigError("iron needs either a BH curve or a relative permeability")
        logger.debug("Materials | iron: %s | magnet mu_r: %s", iron, magnet_permeability)
        return cls(iron, magnet_permeability)

    def __getitem__(self, name: str) -> ReluctivityModel:
        try:
            return self.models[name]
        except KeyError as exc:
            raise ConfigError(f"unknown material '{name}'") from exc

    @property
    def is_linear(self) -> bool:
        """True when every material is linear"""
        return all(model.is_linear for model in self.models.values())
