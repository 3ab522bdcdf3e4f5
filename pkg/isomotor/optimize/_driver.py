"""Optimization runs over the configured modes with an append-only iteration history"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, List, Optional, Union

import numpy as np

from isomotor.common.exceptions import ConfigError
from isomotor.common.types import FloatArray
from isomotor.common.validators import PathValidator
from isomotor.geometry import DesignVector

from ._auglag import AbortSearch, SolverOptions, minimize_augmented_lagrangian, projected_gradient
from ._objective import ObjectiveEvaluation, OptimizationConfig, Phase, evaluate_objective
from ._problem import DesignProblem

__all__ = ["HISTORY_COLUMNS", "IterationRecord", "HistoryWriter", "PhaseResult", "OptimizationResult", "optimize"]

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ("iter", "f", "A", "Tstd", "S", "Tmean", "viol", "gnorm", "evals", "phase")


@dataclass(frozen=True)
class IterationRecord:
    """One row of the optimization history"""

    iteration: int
    phase: str
    x: FloatArray
    value: float
    magnet_area: float
    ripple: float
    smoothness: float
    mean_torque: float
    violation: float
    gradient_norm: float
    evaluations: int

    def row(self) -> List[str]:
        """CSV cells, floats with round-trip precision"""
        numbers = (
            self.value,
            self.magnet_area,
            self.ripple,
            self.smoothness,
            self.mean_torque,
            self.violation,
            self.gradient_norm,
        )
        return [str(self.iteration)] + [format(value, ".17g") for value in numbers] + [str(self.evaluations), self.phase]


class HistoryWriter:
    """Streams iteration records to a CSV file, flushed after every row"""

    def __init__(self, file_path: Union[str, Path]):
        PathValidator().validate(file_path)
        self.file_path = Path(file_path)
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> HistoryWriter:
        self._handle = open(self.file_path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(HISTORY_COLUMNS)
        return self

    def __exit__(self, *exc) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def append(self, record: IterationRecord) -> None:
        """Write one row"""
        if self._handle is None:
            raise RuntimeError("history writer is not open")
        self._writer.writerow(record.row())
        self._handle.flush()


@dataclass(frozen=True)
class PhaseResult:
    """Outcome of one optimizer run"""

    label: str
    status: str
    iterations: int
    evaluations: int
    target_torque: float
    multipliers: FloatArray
    merit_history: List[List[float]] = field(default_factory=list)


@dataclass(frozen=True)
class OptimizationResult:
    """Final design, history and the initial and final evaluations"""

    x: DesignVector
    history: List[IterationRecord]
    phases: List[PhaseResult]
    initial: ObjectiveEvaluation
    final: ObjectiveEvaluation
    target_torque: float

    @property
    def status(self) -> str:
        """Status of the last phase"""
        return self.phases[-1].status if self.phases else "not_started"


class _PhaseObjective:
    """Objective callback of one phase with warm starts and the failure streak"""

    def __init__(self, problem: DesignProblem, config: OptimizationConfig, phase: Phase, counter: List[int]):
        self.problem = problem
        self.config = config
        self.phase = phase
        self.counter = counter
        self.failures = 0
        self.latest: Optional[ObjectiveEvaluation] = None
        self._initial = None

    def evaluate(self, x: FloatArray) -> ObjectiveEvaluation:
        """Objective with gradients at a scaled point"""
        self.counter[0] += 1
        evaluation = evaluate_objective(
            self.problem,
            DesignVector(x, self.problem.space, clip=True),
            self.config.weights,
            self.phase.target_torque,
            initial=self._initial,
            with_parameters=self.phase.label != "shape",
        )
        if evaluation.failed:
            self.failures += 1
            if self.failures > self.config.max_failures:
                raise AbortSearch(f"{self.failures} consecutive failed evaluations")
        else:
            self.failures = 0
            self._initial = [solution.state for solution in evaluation.state.result.solutions]  # type: ignore
            evaluation = replace(evaluation, state=None)
        self.latest = evaluation
        return evaluation

    def __call__(self, x: FloatArray):
        evaluation = self.evaluate(x)
        return evaluation.value, evaluation.gradient, evaluation.constraints, evaluation.constraint_jacobian


def _record(
    iteration: int, phase: str, evaluation: ObjectiveEvaluation, gradient_norm: float, evaluations: int
) -> IterationRecord:
    return IterationRecord(
        iteration=iteration,
        phase=phase,
        x=np.array(evaluation.x),
        value=evaluation.value,
        magnet_area=evaluation.magnet_area,
        ripple=evaluation.ripple,
        smoothness=evaluation.smoothness,
        mean_torque=evaluation.mean_torque,
        violation=evaluation.violation,
        gradient_norm=gradient_norm,
        evaluations=evaluations,
    )


def optimize(
    problem: DesignProblem,
    config: OptimizationConfig,
    x0: DesignVector,
    history: Optional[HistoryWriter] = None,
) -> OptimizationResult:
    """Run the configured mode from x0

    Parameters
    ----------
    problem : DesignProblem
        design to torque pipeline
    config : OptimizationConfig
        mode, weights, target and stopping rules
    x0 : DesignVector
        start, clipped into the box
    history : Optional[HistoryWriter], optional
        open writer that receives every record as it is made

    Returns
    -------
    OptimizationResult
        final design with the full history; an aborted run returns its last
        accepted point

    Raises
    ------
    ConfigError
        if no target is given and the initial mean torque is not positive
    """
    space = problem.space
    x = DesignVector(x0.x, space, clip=True)
    counter = [0]
    initial = evaluate_objective(problem, x, config.weights, 1.0, gradient=False)
    counter[0] += 1
    if initial.failed:
        raise ConfigError("the initial design cannot be evaluated")
    target = config.target_torque
    if target is None:
        if not initial.mean_torque > 0:
            raise ConfigError(f"initial mean torque {initial.mean_torque:.6g} N m gives no positive torque target")
        target = config.target_torque_factor * initial.mean_torque
    constraints = np.array(initial.constraints)
    constraints[0] = (target - initial.mean_torque) / target
    initial = replace(initial, constraints=constraints, state=None)
    logger.info("Optimize | mode: %s | target: %.6e N m | initial f: %.6e", config.mode, target, initial.value)

    records: List[IterationRecord] = []

    def keep(record: IterationRecord) -> None:
        records.append(record)
        if history is not None:
            history.append(record)

    phases = config.phases(space, target)
    keep(_record(0, phases[0].label, initial, np.nan, counter[0]))
    results: List[PhaseResult] = []
    for phase in phases:
        lower = np.where(phase.free, 0.0, x.x)
        upper = np.where(phase.free, 1.0, x.x)
        objective = _PhaseObjective(problem, config, phase, counter)

        def accepted(point: FloatArray, merit: float, c: FloatArray, iteration: int) -> None:
            evaluation = objective.latest
            if evaluation is None or not np.array_equal(evaluation.x, point):
                evaluation = objective.evaluate(point)
            gradient_norm = float(np.linalg.norm(projected_gradient(point, evaluation.gradient, lower, upper)))
            record = _record(len(records), phase.label, evaluation, gradient_norm, counter[0])
            logger.info(
                "Optimize | %s | iter: %d | f: %.6e | Tmean: %.6e | Tstd: %.6e | viol: %.3e | merit: %.6e",
                phase.label,
                record.iteration,
                record.value,
                record.mean_torque,
                record.ripple,
                record.violation,
                merit,
            )
            keep(record)

        options = SolverOptions(
            max_iterations=config.max_iterations,
            gradient_tolerance=config.gradient_tolerance,
            constraint_tolerance=config.constraint_tolerance,
            step_tolerance=config.step_tolerance,
            initial_penalty=config.initial_penalty,
        )
        outcome = minimize_augmented_lagrangian(objective, x.x, lower, upper, options, accepted)
        x = DesignVector(np.clip(outcome.x, 0.0, 1.0), space)
        results.append(
            PhaseResult(
                phase.label,
                outcome.status,
                outcome.iterations,
                outcome.evaluations,
                phase.target_torque,
                outcome.multipliers,
                outcome.merit_history,
            )
        )
        logger.info("Optimize | %s | status: %s | iterations: %d", phase.label, outcome.status, outcome.iterations)
        if outcome.status == "aborted":
            break

    final = initial
    if not np.array_equal(x.x, initial.x):
        final = replace(evaluate_objective(problem, x, config.weights, phases[-1].target_torque, gradient=False), state=None)
    return OptimizationResult(x, records, results, initial, final, target)
