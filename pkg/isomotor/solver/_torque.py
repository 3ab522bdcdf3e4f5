"""Torque from the mortar multipliers and angle sweeps"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from isomotor._settings import settings
from isomotor.assembly import SystemBuilder, rotation_matrix
from isomotor.common.exceptions import ConfigError, SolverError
from isomotor.common.types import FloatArray

from ._newton import FieldSolution, solve_magnetostatic

__all__ = ["torque", "TorqueProfile", "SweepResult", "sweep", "angle_range"]

logger = logging.getLogger(__name__)

# finest angle spacing that resolves the torque ripple of the quarter model
RIPPLE_RESOLUTION = np.deg2rad(1.0)


def torque(solution: FieldSolution, builder: SystemBuilder) -> float:
    """T = -L u_st^T G_st R'_beta lambda of the modelled sector, positive counter-clockwise"""
    derivative = rotation_matrix(solution.beta, builder.harmonics, derivative=True)
    return float(-builder.length * solution.u_st @ (builder.G_st @ (derivative @ solution.multipliers)))


@dataclass(frozen=True)
class TorqueProfile:
    """Torques over a set of rotor angles with their mean and population standard deviation"""

    angles: FloatArray
    torques: FloatArray
    symmetry_factor: int = 1

    def __post_init__(self):
        if len(self.angles) == 0 or len(self.angles) != len(self.torques):
            raise ConfigError("a torque profile needs one torque per angle and at least one angle")

    @property
    def mean(self) -> float:
        """T mean"""
        return float(np.mean(self.torques))

    @property
    def std(self) -> float:
        """T ripple, 1/N convention"""
        return float(np.sqrt(np.mean((self.torques - self.mean) ** 2)))

    @property
    def full_torques(self) -> FloatArray:
        """Torques of the complete machine"""
        return self.symmetry_factor * np.asarray(self.torques)

    @property
    def full_mean(self) -> float:
        """Mean torque of the complete machine"""
        return self.symmetry_factor * self.mean

    def __repr__(self) -> str:
        return f"TorqueProfile(angles={len(self.angles)}, mean={self.mean:.6g}, std={self.std:.6g})"


@dataclass(frozen=True)
class SweepResult:
    """Profile together with the per-angle solutions"""

    profile: TorqueProfile
    solutions: Tuple[FieldSolution, ...]


def angle_range(start_deg: float, stop_deg: float, step_deg: float) -> FloatArray:
    """Angles start, start + step, ... strictly below stop, in radians"""
    if not step_deg > 0:
        raise ConfigError(f"angle step must be positive, got {step_deg}")
    count = int(np.ceil((stop_deg - start_deg) / step_deg - 1e-9))
    if count < 1:
        raise ConfigError(f"empty angle range [{start_deg}, {stop_deg})")
    return np.deg2rad(start_deg + step_deg * np.arange(count))


def sweep(
    builder: SystemBuilder,
    angles: Sequence[float],
    warm_start: bool = True,
    initial: Optional[Sequence[Optional[FloatArray]]] = None,
    threads: Optional[int] = None,
    rtol: Optional[float] = None,
) -> SweepResult:
    """Solve at every angle and collect the torque profile

    With warm starting each angle starts from the previous solution (or from
    `initial[i]` when given, e.g. the solutions of an earlier design). Without
    warm starting and with more than one thread the angles are solved on a
    thread pool; results keep the angle order either way.

    Raises
    ------
    SolverError
        for the first angle that fails, carrying that angle
    """
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ConfigError("a sweep needs at least one angle")
    if angles.size > 1 and np.max(np.diff(np.sort(angles))) > RIPPLE_RESOLUTION * (1 + 1e-9):
        logger.warning("Sweep | angle spacing above 1 deg aliases torque harmonics, the ripple may be underestimated")
    threads = settings.threads if threads is None else threads

    def solve(index: int, start: Optional[FloatArray]) -> FieldSolution:
        try:
            return solve_magnetostatic(builder, angles[index], start, rtol=rtol)
        except SolverError as exc:
            exc.angle = float(angles[index])
            raise

    def start_of(index: int) -> Optional[FloatArray]:
        return None if initial is None else initial[index]

    solutions: List[FieldSolution] = []
    if not warm_start and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(solve, i, start_of(i)) for i in range(angles.size)]
            solutions = [future.result() for future in futures]
    else:
        previous: Optional[FloatArray] = None
        for i in range(angles.size):
            start = start_of(i)
            if start is None and warm_start:
                start = previous
            solution = solve(i, start)
            solutions.append(solution)
            previous = solution.state

    torques = np.array([torque(solution, builder) for solution in solutions])
    for angle, value in zip(angles, torques):
        logger.debug("Sweep | beta: %.4f deg | torque: %.6e N m", np.rad2deg(angle), value)
    profile = TorqueProfile(angles, torques, builder.geometry.symmetry_factor)
    logger.info("Sweep | angles: %d | mean: %.6e | std: %.6e", angles.size, profile.mean, profile.std)
    return SweepResult(profile, tuple(solutions))
