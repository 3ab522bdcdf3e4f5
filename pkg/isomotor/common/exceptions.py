"""Custom exceptions to help with specific error filtering"""

from typing import Optional, Sequence, Tuple

__all__ = [
    "IsomotorError",
    "NumericIntervalError",
    "DomainError",
    "ConfigError",
    "GeometryError",
    "SolverError",
    "LinearAlgebraError",
    "ContractError",
    "GradientCheckError",
]


class IsomotorError(Exception):
    """Base class of every error raised by the package"""


class NumericIntervalError(IsomotorError):
    """Invalid interval error"""


class DomainError(IsomotorError, ValueError):
    """Argument outside the mathematical domain of an operation"""


class ConfigError(IsomotorError):
    """Invalid or inconsistent run configuration"""


class GeometryError(IsomotorError):
    """Degenerate or infeasible geometry"""

    def __init__(self, message: str, patch: Optional[int] = None, point: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.patch = patch
        self.point = point


class SolverError(IsomotorError):
    """Nonlinear solve failed"""

    def __init__(self, message: str, residuals: Sequence[float] = (), angle: Optional[float] = None):
        super().__init__(message)
        self.residuals = list(residuals)
        self.angle = angle


class LinearAlgebraError(SolverError):
    """Singular or failed factorization"""


class ContractError(IsomotorError):
    """Inputs computed under incompatible states were combined"""


class GradientCheckError(IsomotorError):
    """Analytic and finite-difference derivatives disagree"""
