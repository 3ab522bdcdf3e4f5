"""Apply package level settings"""

from pathlib import Path
from typing import Sequence, Union

from .common.validators import (
    IntervalValidator,
    NonNegativeIntValidator,
    PathValidator,
    PositiveValidator,
)

__all__ = ["settings", "Settings", "DATA_PATH"]

DATA_PATH = Path(__file__).parent / "data"

PROJECT_PATHS = (
    DATA_PATH,
    Path.cwd(),
)


class Settings:
    """Container for package 'isomotor' universal settings"""

    def __init__(
        self,
        newton_rtol: float = 1e-10,
        newton_atol: float = 1e-12,
        newton_max_iter: int = 50,
        data_paths: Sequence[Union[Path, str]] = PROJECT_PATHS,
    ):
        self.newton_rtol = newton_rtol
        self.newton_atol = newton_atol
        self.newton_max_iter = newton_max_iter
        self.data_paths = data_paths
        self.armijo_factor = 0.5
        self.armijo_min_step = 2.0**-20
        self.extra_quadrature_points = 0
        self.max_harmonic = 102
        self.dcdp_relative_step = 1e-6
        self.constraint_fd_step = 1e-6
        self.threads = 1

    @property
    def newton_rtol(self) -> float:
        """Relative residual tolerance of the Newton solver"""
        return self._newton_rtol

    @newton_rtol.setter
    def newton_rtol(self, value: float):
        PositiveValidator("newton_rtol").validate(value)
        self._newton_rtol = float(value)

    @property
    def newton_atol(self) -> float:
        """Absolute residual tolerance of the Newton solver"""
        return self._newton_atol

    @newton_atol.setter
    def newton_atol(self, value: float):
        PositiveValidator("newton_atol").validate(value)
        self._newton_atol = float(value)

    @property
    def newton_max_iter(self) -> int:
        """Newton iteration cap"""
        return self._newton_max_iter

    @newton_max_iter.setter
    def newton_max_iter(self, value: int):
        NonNegativeIntValidator("newton_max_iter").validate(value)
        self._newton_max_iter = int(value)

    @property
    def armijo_factor(self) -> float:
        """Step reduction factor of the damped Newton line search"""
        return self._armijo_factor

    @armijo_factor.setter
    def armijo_factor(self, value: float):
        IntervalValidator(0.01, 0.99, "armijo_factor").validate(value)
        self._armijo_factor = float(value)

    @property
    def armijo_min_step(self) -> float:
        """Smallest admissible damping before the solve is declared failed"""
        return self._armijo_min_step

    @armijo_min_step.setter
    def armijo_min_step(self, value: float):
        IntervalValidator(1e-16, 1.0, "armijo_min_step").validate(value)
        self._armijo_min_step = float(value)

    @property
    def extra_quadrature_points(self) -> int:
        """Gauss points added on top of p+1 per knot span"""
        return self._extra_quadrature_points

    @extra_quadrature_points.setter
    def extra_quadrature_points(self, value: int):
        NonNegativeIntValidator("extra_quadrature_points").validate(value)
        self._extra_quadrature_points = int(value)

    @property
    def max_harmonic(self) -> int:
        """Largest mortar harmonic of the default set {2, 6, 10, ...}"""
        return self._max_harmonic

    @max_harmonic.setter
    def max_harmonic(self, value: int):
        NonNegativeIntValidator("max_harmonic").validate(value)
        self._max_harmonic = int(value)

    @property
    def dcdp_relative_step(self) -> float:
        """Forward difference step for dC/dP, as a fraction of the parameter range"""
        return self._dcdp_relative_step

    @dcdp_relative_step.setter
    def dcdp_relative_step(self, value: float):
        IntervalValidator(1e-12, 1e-1, "dcdp_relative_step").validate(value)
        self._dcdp_relative_step = float(value)

    @property
    def constraint_fd_step(self) -> float:
        """Central difference step of the constraint gradients in design coordinates"""
        return self._constraint_fd_step

    @constraint_fd_step.setter
    def constraint_fd_step(self, value: float):
        IntervalValidator(1e-12, 1e-1, "constraint_fd_step").validate(value)
        self._constraint_fd_step = float(value)

    @property
    def threads(self) -> int:
        """Worker threads used by angle sweeps without warm start"""
        return self._threads

    @threads.setter
    def threads(self, value: int):
        NonNegativeIntValidator("threads").validate(value)
        self._threads = max(int(value), 1)

    @property
    def data_paths(self):
        """Paths to search for material curves and configurations"""
        return self._data_paths

    @data_paths.setter
    def data_paths(self, value):
        for path in list(value):
            PathValidator().validate(path)
        self._data_paths = tuple(Path(path) for path in value)

    def find_data_file(self, name: Union[str, Path]) -> Path:
        """Resolve a data file name against the search paths

        Parameters
        ----------
        name : Union[str, Path]
            file name or path; existing paths are returned unchanged

        Returns
        -------
        Path
            the first match

        Raises
        ------
        FileNotFoundError
            if no search path contains the file
        """
        candidate = Path(name)
        if candidate.is_file():
            return candidate
        for folder in self.data_paths:
            if (folder / candidate).is_file():
                return folder / candidate
        raise FileNotFoundError(f"could not find '{name}' in {[str(p) for p in self.data_paths]}")


settings = Settings()
