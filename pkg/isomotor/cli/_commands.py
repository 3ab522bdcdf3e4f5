"""Subcommands: evaluate, gradcheck, optimize and export-geometry"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from isomotor._serialization import atomic_write_text
from isomotor.common.exceptions import ConfigError, GradientCheckError
from isomotor.common.types import FloatArray
from isomotor.geometry import DesignVector
from isomotor.optimize import (
    DesignProblem,
    DesignState,
    HistoryWriter,
    ObjectiveEvaluation,
    evaluate_objective,
    optimize,
)
from isomotor.sensitivity import torque_stats_gradient
from isomotor.solver import TorqueProfile, sample_field, sweep

from ._config import DesignFile, RunConfig

__all__ = [
    "GRADCHECK_RTOL",
    "GradientRow",
    "write_csv",
    "write_json",
    "cmd_evaluate",
    "cmd_gradcheck",
    "cmd_optimize",
    "cmd_export_geometry",
]

logger = logging.getLogger(__name__)

# Newton tolerance while finite differences are taken
GRADCHECK_RTOL = 1e-13

QUANTITIES = ("mean_torque", "ripple", "objective")


def write_csv(file_path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Atomic CSV with '.' decimals and '\\n' line endings, floats at round-trip precision"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(cell, ".17g") if isinstance(cell, float) else cell for cell in row])
    atomic_write_text(file_path, buffer.getvalue())


def write_json(file_path: Union[str, Path], data: Dict[str, Any]) -> None:
    """Atomic JSON document"""
    atomic_write_text(file_path, json.dumps(data, indent=4) + "\n")


def _design(config: RunConfig, design: Optional[DesignFile], threads: Optional[int]) -> Tuple[DesignProblem, DesignVector]:
    if design is None:
        problem = config.problem(threads=threads)
        return problem, problem.space.compose(config.parameters)
    config = design.apply(config)
    problem = config.problem(reference=design.reference, threads=threads)
    return problem, design.design_vector(problem)


def _profile_summary(profile: TorqueProfile) -> Dict[str, float]:
    factor = profile.symmetry_factor
    return {
        "mean_torque": factor * profile.mean,
        "ripple": factor * profile.std,
        "sector_mean_torque": profile.mean,
        "sector_ripple": profile.std,
        "symmetry_factor": factor,
    }


def cmd_evaluate(
    config: RunConfig,
    out: Union[str, Path],
    design: Optional[DesignFile] = None,
    threads: Optional[int] = None,
) -> Dict[str, Any]:
    """Torque sweep of a design with torque.csv, field.csv and summary.json

    Torques are full machine values; field samples belong to the first angle.
    """
    out = Path(out)
    problem, x = _design(config, design, threads)
    target = config.optimization.target_torque or 1.0
    evaluation = evaluate_objective(problem, x, config.optimization.weights, target, gradient=False)
    if evaluation.failed or evaluation.state is None:
        # reraise the underlying error with its exit code
        problem.solve(x)
    state: DesignState = evaluation.state  # type: ignore
    profile = state.result.profile

    write_csv(
        out / "torque.csv",
        ("beta_deg", "torque_Nm"),
        zip(np.rad2deg(profile.angles).tolist(), profile.full_torques.tolist()),
    )
    samples = sample_field(state.builder, state.result.solutions[0], tuple(config.field_grid))  # type: ignore
    write_csv(
        out / "field.csv",
        ("patch", "xi", "eta", "x", "y", "Bx", "By", "Bmag"),
        ((s.patch, s.xi, s.eta, s.x, s.y, s.bx, s.by, s.magnitude) for s in samples),
    )
    summary = {
        **_profile_summary(profile),
        "magnet_area": evaluation.magnet_area,
        "smoothness": evaluation.smoothness,
        "objective": evaluation.value,
        "angles": int(profile.angles.size),
        "newton_iterations": [solution.convergence.iterations for solution in state.result.solutions],
    }
    write_json(out / "summary.json", summary)
    logger.info(
        "Evaluate | angles: %d | mean: %.6e N m | ripple: %.6e N m | magnet area: %.6e m^2",
        profile.angles.size,
        summary["mean_torque"],
        summary["ripple"],
        evaluation.magnet_area,
    )
    return summary


@dataclass(frozen=True)
class GradientRow:
    """Analytic against central difference derivative of one coordinate"""

    coordinate: str
    analytic: float
    fd: float
    rel_error: float


def relative_errors(analytic: FloatArray, fd: FloatArray) -> FloatArray:
    """|a - fd| / max(|a|, |fd|, floor), floor = 1e-6 max |a|; 0 where both vanish"""
    analytic = np.asarray(analytic, dtype=float)
    fd = np.asarray(fd, dtype=float)
    floor = 1e-6 * float(np.max(np.abs(analytic), initial=0.0))
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), floor)
    difference = np.abs(analytic - fd)
    return np.divide(difference, scale, out=np.zeros_like(difference), where=scale > 0)


def _statistic(profile: TorqueProfile, quantity: str) -> float:
    factor = profile.symmetry_factor
    return factor * (profile.mean if quantity == "mean_torque" else profile.std)


def _select_design(selection: str, problem: DesignProblem) -> List[int]:
    names = problem.space.names
    if selection == "all":
        return list(range(problem.space.size))
    if selection == "params":
        return list(range(problem.space.n_parameters))
    if selection == "offsets":
        return list(range(problem.space.n_parameters, problem.space.size))
    chosen = []
    for name in (part.strip() for part in selection.split(",") if part.strip()):
        if name not in names:
            raise ConfigError(f"unknown design coordinate '{name}'")
        chosen.append(names.index(name))
    return chosen


def _design_check(
    problem: DesignProblem,
    x: DesignVector,
    config: RunConfig,
    coordinates: Sequence[int],
    quantity: str,
    step: float,
) -> Tuple[List[str], FloatArray, FloatArray]:
    target = config.optimization.target_torque or 1.0
    weights = config.optimization.weights
    state = problem.solve(x, rtol=GRADCHECK_RTOL)
    initial = [solution.state for solution in state.result.solutions]
    if quantity == "objective":
        gradient = evaluate_objective(problem, x, weights, target, rtol=GRADCHECK_RTOL).gradient
    else:
        bundle = problem.sensitivities(state)
        factor = state.result.profile.symmetry_factor
        gradient = factor * (bundle.mean_gradient if quantity == "mean_torque" else bundle.std_gradient)

    def value(point: FloatArray) -> float:
        design = DesignVector(point, problem.space)
        if quantity == "objective":
            evaluation: ObjectiveEvaluation = evaluate_objective(
                problem, design, weights, target, gradient=False, initial=initial, rtol=GRADCHECK_RTOL
            )
            if evaluation.failed:
                problem.solve(design, initial, GRADCHECK_RTOL)
            return evaluation.value
        return _statistic(problem.solve(design, initial, GRADCHECK_RTOL).result.profile, quantity)

    names, analytic, fd = [], [], []
    for index in coordinates:
        plus, minus = np.array(x.x), np.array(x.x)
        plus[index] = min(1.0, x.x[index] + step)
        minus[index] = max(0.0, x.x[index] - step)
        fd.append((value(plus) - value(minus)) / (plus[index] - minus[index]))
        analytic.append(gradient[index])
        names.append(problem.space.names[index])
        logger.debug("Gradcheck | %s | analytic: %.6e | fd: %.6e", names[-1], analytic[-1], fd[-1])
    return names, np.array(analytic), np.array(fd)


def _control_point_check(
    problem: DesignProblem,
    x: DesignVector,
    count: int,
    quantity: str,
    step: float,
    seed: int,
) -> Tuple[List[str], FloatArray, FloatArray]:
    if quantity == "objective":
        raise ConfigError("control point checks support the torque quantities only")
    state = problem.solve(x, rtol=GRADCHECK_RTOL)
    initial = [solution.state for solution in state.result.solutions]
    bundle = problem.sensitivities(state, with_parameters=False)
    profile = state.result.profile
    factor = profile.symmetry_factor
    per_angle = np.stack([entry.dT_dC for entry in bundle.angles])
    mean_gradient, std_gradient, _ = torque_stats_gradient(profile, per_angle)
    gradient = factor * (mean_gradient if quantity == "mean_torque" else std_gradient)

    geometry = state.geometry
    fixed = np.union1d(geometry.tagged_points("airgap", "rotor"), geometry.tagged_points("airgap", "stator"))
    eligible = np.setdiff1d(np.arange(geometry.n_points), fixed)
    rng = np.random.default_rng(seed)
    points = rng.choice(eligible, size=min(count, eligible.size), replace=False)
    directions = rng.integers(0, 2, size=points.size)

    names, analytic, fd = [], [], []
    for point, direction in zip(points.tolist(), directions.tolist()):
        shifted = []
        for sign in (1.0, -1.0):
            coordinates = geometry.control_points()
            coordinates[point, direction] += sign * step
            builder = state.builder.with_geometry(geometry.with_control_points(coordinates))
            result = sweep(builder, problem.angles, problem.warm_start, initial, problem.threads, GRADCHECK_RTOL)
            shifted.append(_statistic(result.profile, quantity))
        fd.append((shifted[0] - shifted[1]) / (2.0 * step))
        analytic.append(gradient[2 * point + direction])
        names.append(f"C{point}{'xy'[direction]}")
    return names, np.array(analytic), np.array(fd)


def cmd_gradcheck(
    config: RunConfig,
    out: Union[str, Path],
    selection: str = "params",
    quantity: str = "mean_torque",
    fd_step: Optional[float] = None,
    threshold: float = 1e-5,
    seed: int = 0,
    threads: Optional[int] = None,
    inject_fault: bool = False,
) -> List[GradientRow]:
    """Analytic derivatives against central differences, written to gradcheck.csv

    `selection` is 'all', 'params', 'offsets', a comma list of design
    coordinate names, or 'cp:N' for N random control point coordinates off
    the airgap. Design steps are in unit box coordinates (default 1e-6),
    control point steps in meters (default 1e-7).

    Raises
    ------
    GradientCheckError
        if any relative error exceeds `threshold`, after the report is written
    """
    if quantity not in QUANTITIES:
        raise ConfigError(f"unknown quantity '{quantity}', expected one of {', '.join(QUANTITIES)}")
    problem, x = _design(config, None, threads)
    if selection.startswith("cp:"):
        try:
            count = int(selection[3:])
        except ValueError as exc:
            raise ConfigError(f"cannot read a control point count from '{selection}'") from exc
        step = 1e-7 if fd_step is None else fd_step
        names, analytic, fd = _control_point_check(problem, x, count, quantity, step, seed)
    else:
        step = 1e-6 if fd_step is None else fd_step
        names, analytic, fd = _design_check(problem, x, config, _select_design(selection, problem), quantity, step)

    if inject_fault and analytic.size:
        analytic[0] = 2.0 * analytic[0] + 1.0
    errors = relative_errors(analytic, fd)
    rows = [GradientRow(n, float(a), float(f), float(e)) for n, a, f, e in zip(names, analytic, fd, errors)]
    write_csv(Path(out) / "gradcheck.csv", ("coordinate", "analytic", "fd", "rel_error"), ((r.coordinate, r.analytic, r.fd, r.rel_error) for r in rows))
    worst = max((row.rel_error for row in rows), default=0.0)
    logger.info("Gradcheck | coordinates: %d | worst relative error: %.3e | threshold: %.1e", len(rows), worst, threshold)
    if worst > threshold:
        failed = [row.coordinate for row in rows if row.rel_error > threshold]
        raise GradientCheckError(f"relative error {worst:.3e} above {threshold:.1e} for {', '.join(failed)}")
    return rows


def _report_entry(evaluation: ObjectiveEvaluation) -> Dict[str, float]:
    return {
        "f": evaluation.value,
        "magnet_area": evaluation.magnet_area,
        "ripple": evaluation.ripple,
        "mean_torque": evaluation.mean_torque,
        "smoothness": evaluation.smoothness,
        "violation": evaluation.violation,
    }


def cmd_optimize(
    config: RunConfig,
    out: Union[str, Path],
    threads: Optional[int] = None,
    design: Optional[DesignFile] = None,
) -> Dict[str, Any]:
    """Run the optimizer with history.csv, design.json and report.json

    The history is streamed row by row so an aborted run keeps its rows.
    """
    out = Path(out)
    problem, x0 = _design(config, design, threads)
    with HistoryWriter(out / "history.csv") as history:
        result = optimize(problem, config.optimization, x0, history)
    DesignFile.from_design(result.x, problem).dump_json(out / "design.json", overwrite=True)
    report = {
        "mode": config.optimization.mode,
        "status": result.status,
        "target_torque": result.target_torque,
        "phases": [
            {"label": p.label, "status": p.status, "iterations": p.iterations, "evaluations": p.evaluations}
            for p in result.phases
        ],
        "initial": _report_entry(result.initial),
        "final": _report_entry(result.final),
    }
    write_json(out / "report.json", report)
    logger.info(
        "Optimize | status: %s | f: %.6e -> %.6e | ripple: %.6e -> %.6e",
        result.status,
        result.initial.value,
        result.final.value,
        result.initial.ripple,
        result.final.ripple,
    )
    return report


def cmd_export_geometry(
    config: RunConfig,
    out: Union[str, Path],
    design: Optional[DesignFile] = None,
) -> DesignFile:
    """Write design.json and the control net control_points.csv of a design"""
    out = Path(out)
    problem, x = _design(config, design, None)
    geometry = problem.geometry(x)
    exported = DesignFile.from_design(x, problem)
    exported.dump_json(out / "design.json", overwrite=True)

    def rows():
        for index, (record, ids) in enumerate(zip(geometry.records, geometry.global_ids)):
            points = record.patch.control_points
            weights = record.patch.basis.weights
            for i in range(points.shape[0]):
                for j in range(points.shape[1]):
                    yield (index, record.label, record.side, i, j, int(ids[i, j]), float(points[i, j, 0]), float(points[i, j, 1]), float(weights[i, j]))

    write_csv(out / "control_points.csv", ("patch", "label", "side", "i", "j", "id", "x", "y", "weight"), rows())
    logger.info("Export | patches: %d | control points: %d", len(geometry), geometry.n_points)
    return exported
