"""Weighted objective, optimizer configuration and the design evaluation"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from isomotor._serialization import JsonSerializer
from isomotor.common.exceptions import ConfigError, GeometryError, SolverError
from isomotor.common.types import FloatArray
from isomotor.common.validators import IntervalValidator, PositiveValidator
from isomotor.geometry import (
    FREE_PARAMETERS,
    MIN_BRIDGE,
    DesignSpace,
    DesignVector,
    geometric_constraints,
    magnet_area_and_gradient,
    smoothness_and_gradient,
)

from ._problem import DesignProblem, DesignState

__all__ = [
    "FAILURE_VALUE",
    "Mode",
    "ObjectiveWeights",
    "OptimizationConfig",
    "Phase",
    "ObjectiveEvaluation",
    "evaluate_objective",
]

logger = logging.getLogger(__name__)

# objective reported for designs that cannot be built or solved
FAILURE_VALUE = 1e6

Mode = Literal["param", "shape", "sequential", "combined"]
MODES: Tuple[str, ...] = ("param", "shape", "sequential", "combined")


@dataclass(frozen=True)
class ObjectiveWeights:
    """f = w1 A_magnet + w2 T_std + w3 S"""

    magnet_area: float = 1e4
    ripple: float = 100.0
    smoothness: float = 1e3

    def __post_init__(self):
        values = self.as_tuple()
        if any(value < 0 for value in values):
            raise ConfigError(f"objective weights must be non-negative, got {values}")
        if not any(value > 0 for value in values):
            raise ConfigError("at least one objective weight must be positive")

    def as_tuple(self) -> Tuple[float, float, float]:
        """(w1, w2, w3)"""
        return (self.magnet_area, self.ripple, self.smoothness)


@dataclass(frozen=True)
class Phase:
    """One optimizer run over a subset of the design coordinates"""

    label: str
    free: np.ndarray
    target_torque: float


@dataclass
class OptimizationConfig(JsonSerializer):
    """Optimizer settings

    Torques are full machine values. A missing target is set to
    `target_torque_factor` times the mean torque of the initial design; a
    missing shape target falls back to the target.
    """

    mode: str = "combined"
    target_torque: Optional[float] = None
    target_torque_factor: float = 1.02
    shape_target_torque: Optional[float] = None
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    max_iterations: int = 100
    symmetric_offsets: bool = True
    offset_bounds_mm: Tuple[float, float] = (-1.5, 0.25)
    optimize_operating_angle: bool = False
    gradient_tolerance: float = 1e-6
    constraint_tolerance: float = 1e-6
    step_tolerance: float = 1e-10
    max_failures: int = 10
    initial_penalty: float = 10.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown optimization mode '{self.mode}', expected one of {', '.join(MODES)}")
        for name in ("target_torque", "shape_target_torque"):
            value = getattr(self, name)
            if value is not None:
                PositiveValidator(name).validate(value)
        for name in ("target_torque_factor", "gradient_tolerance", "constraint_tolerance", "step_tolerance"):
            PositiveValidator(name).validate(getattr(self, name))
        PositiveValidator("initial_penalty").validate(self.initial_penalty)
        if self.max_iterations < 0 or self.max_failures < 0:
            raise ConfigError("iteration and failure limits must be non-negative")
        for bound in self.offset_bounds_mm:
            IntervalValidator(-1.5, 1.5, "offset bound").validate(bound)
        self.offset_bounds_mm = (float(self.offset_bounds_mm[0]), float(self.offset_bounds_mm[1]))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> OptimizationConfig:
        data = dict(data)
        weights = data.pop("weights", None)
        if weights is not None:
            data["weights"] = ObjectiveWeights(*weights)
        if "offset_bounds_mm" in data:
            data["offset_bounds_mm"] = tuple(data["offset_bounds_mm"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid optimization settings: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "target_torque": self.target_torque,
            "target_torque_factor": self.target_torque_factor,
            "shape_target_torque": self.shape_target_torque,
            "weights": list(self.weights.as_tuple()),
            "max_iterations": self.max_iterations,
            "symmetric_offsets": self.symmetric_offsets,
            "offset_bounds_mm": list(self.offset_bounds_mm),
            "optimize_operating_angle": self.optimize_operating_angle,
            "gradient_tolerance": self.gradient_tolerance,
            "constraint_tolerance": self.constraint_tolerance,
            "step_tolerance": self.step_tolerance,
            "max_failures": self.max_failures,
            "initial_penalty": self.initial_penalty,
        }

    @property
    def offset_bounds(self) -> Tuple[float, float]:
        """Offset bounds in meters"""
        return (self.offset_bounds_mm[0] * 1e-3, self.offset_bounds_mm[1] * 1e-3)

    def free_mask(self, space: DesignSpace, group: str) -> np.ndarray:
        """Coordinates that move in a run over `group` ('param', 'shape' or 'combined')"""
        free = np.zeros(space.size, dtype=bool)
        if group in ("param", "combined"):
            free[space.parameter_slice()] = True
        if group in ("shape", "combined"):
            free[space.offset_slice()] = True
        if group == "shape" and self.optimize_operating_angle:
            free[FREE_PARAMETERS.index("OPERATING_ANGLE")] = True
        return free

    def phases(self, space: DesignSpace, target: float) -> List[Phase]:
        """Runs of the configured mode in order"""
        if self.mode == "sequential":
            shape_target = self.shape_target_torque or target
            return [
                Phase("param", self.free_mask(space, "param"), target),
                Phase("shape", self.free_mask(space, "shape"), shape_target),
            ]
        return [Phase(self.mode, self.free_mask(space, self.mode), target)]


@dataclass(frozen=True)
class ObjectiveEvaluation:
    """Objective, its components, the constraint data and all gradients at one design

    Constraint values are (T_target - T_mean) / T_target followed by the nine
    bridge shortfalls divided by the minimum bridge width; all are feasible
    when non-positive.
    """

    x: FloatArray
    value: float
    magnet_area: float
    ripple: float
    smoothness: float
    mean_torque: float
    constraints: FloatArray
    gradient: FloatArray
    constraint_jacobian: FloatArray
    failed: bool = False
    flat_profile: bool = False
    state: Optional[DesignState] = None

    @property
    def geometric_violation(self) -> float:
        """Largest bridge shortfall in meters, 0 when feasible"""
        return max(0.0, float(np.max(self.constraints[1:])) * MIN_BRIDGE)

    @property
    def torque_violation(self) -> float:
        """Relative mean torque shortfall, 0 when the target is met"""
        return max(0.0, float(self.constraints[0]))

    @property
    def violation(self) -> float:
        """Largest scaled constraint violation"""
        return max(0.0, float(np.max(self.constraints)))


def failed_evaluation(x: FloatArray, n_constraints: int) -> ObjectiveEvaluation:
    """Sentinel for designs that cannot be built or solved"""
    size = np.asarray(x).size
    return ObjectiveEvaluation(
        x=np.array(x, dtype=float),
        value=FAILURE_VALUE,
        magnet_area=np.nan,
        ripple=np.nan,
        smoothness=np.nan,
        mean_torque=np.nan,
        constraints=np.zeros(n_constraints),
        gradient=np.zeros(size),
        constraint_jacobian=np.zeros((n_constraints, size)),
        failed=True,
    )


def evaluate_objective(
    problem: DesignProblem,
    x: DesignVector,
    weights: ObjectiveWeights,
    target_torque: float,
    gradient: bool = True,
    initial: Optional[Sequence[Optional[FloatArray]]] = None,
    with_parameters: bool = True,
    rtol: Optional[float] = None,
) -> ObjectiveEvaluation:
    """f = w1 A_magnet + w2 T_std + w3 S with the torque and bridge constraints

    Designs whose geometry inverts or whose field solve fails return the
    `FAILURE_VALUE` sentinel with zero gradients and `failed` set.

    Parameters
    ----------
    problem : DesignProblem
        design to torque pipeline
    x : DesignVector
        design point
    weights : ObjectiveWeights
        scalarization weights
    target_torque : float
        required full machine mean torque in N m
    gradient : bool, optional
        compute the adjoint gradients, by default True
    initial : optional
        Newton start states per angle
    with_parameters : bool, optional
        compute the parameter columns of the torque gradient, by default True
    rtol : Optional[float], optional
        Newton tolerance override
    """
    PositiveValidator("target_torque").validate(target_torque)
    n_constraints = 10
    try:
        state = problem.solve(x, initial, rtol)
    except (GeometryError, SolverError) as exc:
        logger.warning("Objective | design rejected: %s", exc)
        return failed_evaluation(x.x, n_constraints)

    space = problem.space
    profile = state.result.profile
    factor = profile.symmetry_factor
    w1, w2, w3 = weights.as_tuple()

    area, area_gradient = magnet_area_and_gradient(x)
    smoothness, smoothness_physical = smoothness_and_gradient(state.offsets, problem.layout.angles)
    bridges, bridges_gradient = geometric_constraints(x, problem.template)
    ripple = factor * profile.std
    mean_torque = factor * profile.mean
    value = w1 * area + w2 * ripple + w3 * smoothness
    constraints = np.concatenate([[(target_torque - mean_torque) / target_torque], bridges / MIN_BRIDGE])

    total_gradient = np.zeros(space.size)
    jacobian = np.zeros((n_constraints, space.size))
    flat = False
    if gradient:
        bundle = problem.sensitivities(state, with_parameters)
        flat = bundle.flat_profile
        smoothness_gradient = np.zeros(space.size)
        smoothness_gradient[space.offset_slice()] = problem.layout.fold(smoothness_physical)
        smoothness_gradient *= space.ranges
        total_gradient = w1 * area_gradient + w2 * factor * bundle.std_gradient + w3 * smoothness_gradient
        jacobian[0] = -factor * bundle.mean_gradient / target_torque
        jacobian[1:] = bridges_gradient / MIN_BRIDGE

    logger.debug(
        "Objective | f: %.6e | A: %.6e | Tstd: %.6e | S: %.6e | Tmean: %.6e",
        value,
        area,
        ripple,
        smoothness,
        mean_torque,
    )
    return ObjectiveEvaluation(
        x=np.array(x.x),
        value=value,
        magnet_area=area,
        ripple=ripple,
        smoothness=smoothness,
        mean_torque=mean_torque,
        constraints=constraints,
        gradient=total_gradient,
        constraint_jacobian=jacobian,
        flat_profile=flat,
        state=state,
    )
