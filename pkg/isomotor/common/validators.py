"""Input validators for the isomotor package"""

import re
from pathlib import Path
from typing import Protocol, Sequence, Union

import numpy as np

from .exceptions import DomainError, NumericIntervalError
from .types import Numeric

# Too few public methods
# pylint: disable=R0903


class IValidator(Protocol):
    """Generic validator"""

    def validate(self, *args, **kwargs) -> None:
        """Generic validator"""
        raise NotImplementedError("validate not implemented")


def _is_real(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


class IntervalValidator(IValidator):
    """Closed interval validator"""

    def __init__(self, _min: Numeric, _max: Numeric, name: str = "value"):
        self.min = _min
        self.max = _max
        self.name = name

    def validate(self, value: Numeric) -> None:
        if not _is_real(value):
            raise TypeError(f"{self.name} should be a Numeric[int, float]")
        if not self.min <= value <= self.max:
            raise NumericIntervalError(f"{self.name} ({value}) lies outside [{self.min}, {self.max}]")


class UnitIntervalValidator(IntervalValidator):
    """Unit interval validator [0,1]"""

    def __init__(self, name: str = "value"):
        super().__init__(_min=0, _max=1, name=name)


class PositiveValidator(IValidator):
    """Strictly positive number validator"""

    def __init__(self, name: str = "value"):
        self.name = name

    def validate(self, value: Numeric) -> None:
        if not _is_real(value):
            raise TypeError(f"{self.name} should be a Numeric[int, float]")
        if not value > 0:
            raise NumericIntervalError(f"{self.name} ({value}) must be strictly positive")


class NonNegativeIntValidator(IValidator):
    """Non-negative integer validator"""

    def __init__(self, name: str = "value"):
        self.name = name

    def validate(self, value: int) -> None:
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise TypeError(f"{self.name} should be an int")
        if value < 0:
            raise NumericIntervalError(f"{self.name} ({value}) must be non-negative")


class KnotVectorValidator(IValidator):
    """Open knot vector validator on [0,1]"""

    def validate(self, knots: Sequence[float], degree: int) -> None:
        NonNegativeIntValidator("degree").validate(degree)
        array = np.asarray(knots, dtype=float)
        if array.ndim != 1 or array.size < 2 * (degree + 1):
            raise DomainError(f"knot vector needs at least {2 * (degree + 1)} entries for degree {degree}")
        if np.any(np.diff(array) < 0):
            raise DomainError("knot vector must be non-decreasing")
        if array[0] != 0.0 or array[-1] != 1.0:
            raise DomainError("knot vector must start at 0 and end at 1")
        first = np.count_nonzero(array == array[0])
        last = np.count_nonzero(array == array[-1])
        if first != degree + 1 or last != degree + 1:
            raise DomainError(f"end knots must have multiplicity exactly {degree + 1} (open knot vector)")
        _, counts = np.unique(array[degree + 1 : -degree - 1], return_counts=True)
        if counts.size and counts.max() > degree:
            raise DomainError("interior knot multiplicity may not exceed the degree")


class PathValidator(IValidator):
    """File system path given as str or pathlib.Path"""

    def validate(self, path: Union[str, Path]) -> None:
        if not isinstance(path, (Path, str)):
            raise TypeError("expected a str or pathlib.Path")


class ExistingFileValidator(PathValidator):
    """Path that must point at an existing file"""

    def validate(self, path: Union[str, Path]) -> None:
        super().validate(path)
        if not Path(path).is_file():
            raise FileNotFoundError(f"no such file: {path}")


class RegexValidator(IValidator):
    """String that must match a pattern"""

    def __init__(self, regex_pattern: str, name: str = "string"):
        self.regex = re.compile(regex_pattern)
        self.name = name

    def validate(self, string: str) -> None:
        if not isinstance(string, str):
            raise TypeError(f"{self.name} should be a string")
        if len(string) == 0:
            raise ValueError(f"{self.name} is empty")
        if not self.regex.match(string):
            raise ValueError(f"invalid {self.name}: {string}")


class NameValidator(RegexValidator):
    """Parameter name validator, upper case identifiers such as 'MW1'"""

    def __init__(self):
        super().__init__(r"^[A-Z][A-Z0-9_]*$", "parameter name")
