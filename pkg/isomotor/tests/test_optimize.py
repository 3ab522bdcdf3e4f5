import csv

import numpy as np
import pytest
from pytest import mark, param

from isomotor.common.exceptions import ConfigError, NumericIntervalError
from isomotor.geometry import FREE_PARAMETERS, DesignSpace, DesignVector, ParameterSet
from isomotor.optimize import (
    FAILURE_VALUE,
    HISTORY_COLUMNS,
    AbortSearch,
    HistoryWriter,
    IterationRecord,
    ObjectiveWeights,
    OptimizationConfig,
    SolverOptions,
    evaluate_objective,
    minimize_augmented_lagrangian,
    optimize,
    projected_gradient,
)
from isomotor.optimize._objective import failed_evaluation
from isomotor.solver import angle_range


def quadratic(x):
    """x^2 + y^2 subject to 1 - x - y <= 0"""
    return float(x @ x), 2.0 * x, np.array([1.0 - x.sum()]), np.array([[-1.0, -1.0]])


def shifted_quadratic(x):
    """(x - 3)^2 + (y - 3)^2 subject to x + y - 1 <= 0"""
    return float((x - 3.0) @ (x - 3.0)), 2.0 * (x - 3.0), np.array([x.sum() - 1.0]), np.array([[1.0, 1.0]])


class TestAugmentedLagrangian:
    """box constrained augmented Lagrangian on small problems"""

    def test_active_constraint(self):
        result = minimize_augmented_lagrangian(quadratic, np.array([2.0, -1.0]), np.full(2, -5.0), np.full(2, 5.0))

        assert result.converged
        assert result.x == pytest.approx([0.5, 0.5], abs=1e-5)
        assert result.multipliers == pytest.approx([1.0], abs=1e-4)
        assert result.evaluations > 0

    def test_box_bound(self):
        def shifted(x):
            return float((x[0] - 2.0) ** 2), np.array([2.0 * (x[0] - 2.0)]), np.array([-1.0]), np.zeros((1, 1))

        result = minimize_augmented_lagrangian(shifted, np.array([0.5]), np.zeros(1), np.ones(1))

        assert result.converged
        assert result.x == pytest.approx([1.0])
        assert result.multipliers == pytest.approx([0.0])

    def test_equal_bounds_stay_fixed(self):
        lower = np.array([-5.0, 0.2])
        upper = np.array([5.0, 0.2])
        result = minimize_augmented_lagrangian(quadratic, np.array([0.0, 0.2]), lower, upper)

        assert result.x[1] == 0.2
        assert result.x[0] == pytest.approx(0.8, abs=1e-5)

    def test_abort_keeps_the_last_accepted_point(self):
        accepted = []

        def callback(x, merit, c, iteration):
            accepted.append(np.array(x))
            raise AbortSearch("stop")

        result = minimize_augmented_lagrangian(
            quadratic, np.array([2.0, -1.0]), np.full(2, -5.0), np.full(2, 5.0), callback=callback
        )

        assert result.status == "aborted"
        assert np.array_equal(result.x, accepted[-1])

    def test_iteration_cap(self):
        options = SolverOptions(max_iterations=1)
        result = minimize_augmented_lagrangian(
            quadratic, np.array([2.0, -1.0]), np.full(2, -5.0), np.full(2, 5.0), options
        )

        assert result.status == "max_iterations"
        assert result.iterations <= 1

    def test_multiplier_of_a_binding_constraint(self):
        result = minimize_augmented_lagrangian(shifted_quadratic, np.zeros(2), np.full(2, -5.0), np.full(2, 5.0))

        assert result.converged
        assert result.x == pytest.approx([0.5, 0.5], abs=1e-5)
        assert result.multipliers == pytest.approx([5.0], abs=1e-3)

    def test_inner_iterations_are_capped(self):
        options = SolverOptions(inner_iterations=2)
        result = minimize_augmented_lagrangian(
            shifted_quadratic, np.zeros(2), np.full(2, -5.0), np.full(2, 5.0), options
        )

        assert len(result.merit_history) >= 2
        assert all(len(history) <= options.inner_iterations + 1 for history in result.merit_history)
        assert result.x == pytest.approx([0.5, 0.5], abs=1e-4)

    @pytest.mark.parametrize("objective", [quadratic, shifted_quadratic])
    def test_merit_never_increases_within_an_outer_iteration(self, objective):
        result = minimize_augmented_lagrangian(objective, np.array([2.0, -1.0]), np.full(2, -5.0), np.full(2, 5.0))

        for history in result.merit_history:
            values = np.array(history)
            assert np.all(np.diff(values) <= 1e-12 * np.maximum(1.0, np.abs(values[:-1])))

    def test_wrong_gradient_stalls(self):
        def uphill(x):
            return float(x @ x), -2.0 * x, np.array([-1.0]), np.zeros((1, 1))

        result = minimize_augmented_lagrangian(uphill, np.array([1.0]), np.full(1, -5.0), np.full(1, 5.0))

        assert result.status == "stalled"
        assert not result.converged
        assert result.x == pytest.approx([1.0])
        assert result.penalty > SolverOptions().initial_penalty



def test_projected_gradient():
    x = np.array([0.0, 0.5, 1.0])
    gradient = np.array([1.0, -1.0, -1.0])

    assert np.allclose(projected_gradient(x, gradient, np.zeros(3), np.ones(3)), [0.0, -0.5, 0.0])


@pytest.mark.parametrize(
    "weights",
    [
        (1e4, 100.0, 1e3),
        (0.0, 1.0, 0.0),
        param((-1.0, 1.0, 1.0), marks=mark.xfail(raises=ConfigError, reason="negative weight")),
        param((0.0, 0.0, 0.0), marks=mark.xfail(raises=ConfigError, reason="all weights zero")),
    ],
)
def test_objective_weights(weights):
    ObjectiveWeights(*weights)


class TestOptimizationConfig:
    """optimizer settings"""

    @pytest.fixture(autouse=True)
    def space(self):
        self.space = DesignSpace(ParameterSet.default(), 8)

    def test_round_trip(self, bundled_config):
        data = bundled_config.optimization.to_dict()

        assert OptimizationConfig.from_dict(data) == bundled_config.optimization
        assert bundled_config.optimization.offset_bounds == pytest.approx((-1.5e-3, 0.25e-3))

    @pytest.mark.parametrize(
        "data, error",
        [
            ({"mode": "random"}, ConfigError),
            ({"max_iter": 5}, ConfigError),
            ({"offset_bounds_mm": [-2.0, 0.25]}, NumericIntervalError),
            ({"target_torque": -1.0}, NumericIntervalError),
        ],
    )
    def test_invalid(self, data, error):
        with pytest.raises(error):
            OptimizationConfig.from_dict(data)

    def test_free_mask(self):
        config = OptimizationConfig()
        angle = FREE_PARAMETERS.index("OPERATING_ANGLE")

        assert config.free_mask(self.space, "combined").all()
        assert config.free_mask(self.space, "param").sum() == 17
        assert not config.free_mask(self.space, "shape")[angle]
        assert OptimizationConfig(optimize_operating_angle=True).free_mask(self.space, "shape")[angle]

    def test_sequential_phases(self):
        phases = OptimizationConfig(mode="sequential").phases(self.space, 2.0)

        assert [phase.label for phase in phases] == ["param", "shape"]
        assert [phase.target_torque for phase in phases] == [2.0, 2.0]
        assert not np.any(phases[0].free & phases[1].free)

        shaped = OptimizationConfig(mode="sequential", shape_target_torque=3.0).phases(self.space, 2.0)
        assert shaped[1].target_torque == 3.0


def test_failed_evaluation():
    evaluation = failed_evaluation(np.full(4, 0.5), 10)

    assert evaluation.failed
    assert evaluation.value == FAILURE_VALUE
    assert not np.any(evaluation.gradient)
    assert evaluation.constraint_jacobian.shape == (10, 4)
    assert evaluation.violation == 0.0


def test_history_writer(tmp_path):
    file_path = tmp_path / "out" / "history.csv"
    record = IterationRecord(3, "param", np.zeros(2), 1.0, 2e-4, 0.1, 0.0, 5.0, 0.0, np.nan, 7)

    with HistoryWriter(file_path) as writer:
        writer.append(record)
        writer.append(record)

    with open(file_path, "r", encoding="utf-8") as fio:
        rows = list(csv.reader(fio))
    assert tuple(rows[0]) == HISTORY_COLUMNS
    assert len(rows) == 3
    assert rows[1][0] == "3"
    assert rows[1][-1] == "param"
    assert float(rows[1][2]) == 2e-4

    with pytest.raises(RuntimeError):
        HistoryWriter(file_path).append(record)


@pytest.mark.usefixtures("cls_coarse_state")
class TestCoarseObjective:
    """objective and a short run on the coarse linear problem"""

    @pytest.fixture(autouse=True)
    def target(self):
        self.target = max(abs(self.state.result.profile.full_mean), 1e-3)
        self.weights = ObjectiveWeights()

    def test_components(self):
        evaluation = evaluate_objective(self.problem, self.state.x, self.weights, self.target)
        profile = evaluation.state.result.profile

        assert not evaluation.failed
        assert evaluation.magnet_area == pytest.approx(1.76e-4)
        assert evaluation.smoothness == pytest.approx(0.0)
        assert evaluation.ripple == pytest.approx(4 * profile.std)
        assert evaluation.value == pytest.approx(1e4 * evaluation.magnet_area + 100.0 * evaluation.ripple)
        assert evaluation.constraints.shape == (10,)
        assert evaluation.constraints[0] == pytest.approx((self.target - evaluation.mean_torque) / self.target)
        assert evaluation.gradient.shape == (self.problem.space.size,)
        assert np.all(np.isfinite(evaluation.constraint_jacobian))

    def test_gradient_matches_finite_differences(self):
        evaluation = evaluate_objective(self.problem, self.state.x, self.weights, self.target)
        index = FREE_PARAMETERS.index("WMAG")
        step = 1e-6
        values = []
        for sign in (1.0, -1.0):
            shifted = np.array(self.state.x.x)
            shifted[index] += sign * step
            x = DesignVector(shifted, self.problem.space)
            values.append(evaluate_objective(self.problem, x, self.weights, self.target, gradient=False).value)

        assert evaluation.gradient[index] == pytest.approx((values[0] - values[1]) / (2 * step), rel=1e-3)

    def test_short_run(self, tmp_path):
        config = OptimizationConfig(mode="param", target_torque=self.target, max_iterations=2)

        with HistoryWriter(tmp_path / "history.csv") as writer:
            result = optimize(self.problem, config, self.state.x, writer)

        with open(tmp_path / "history.csv", "r", encoding="utf-8") as fio:
            rows = list(csv.reader(fio))
        assert len(rows) == len(result.history) + 1
        assert result.history[0].iteration == 0
        assert all(record.phase == "param" for record in result.history)
        assert result.status in ("converged", "max_iterations", "small_step", "stalled", "aborted")
        assert result.target_torque == self.target
        assert np.array_equal(result.x.x[17:], self.state.x.x[17:])

    def test_objective_decreases_with_a_loose_target(self):
        config = OptimizationConfig(mode="param", target_torque=0.5 * self.target, max_iterations=4)
        result = optimize(self.problem, config, self.state.x)

        assert result.final.value <= result.initial.value
        for phase in result.phases:
            for history in phase.merit_history:
                values = np.array(history)
                assert np.all(np.diff(values) <= 1e-12 * np.maximum(1.0, np.abs(values[:-1])))


@mark.slow
def test_combined_run_halves_objective_and_ripple(coarse_config):
    """Combined mode on six angles over one slot pitch with the target 2 % above the initial mean"""
    problem = coarse_config.with_angles(angle_range(0.0, 30.0, 5.0)).problem()
    x0 = problem.space.compose(problem.template.reference)
    config = OptimizationConfig(mode="combined", target_torque_factor=1.02, max_iterations=100)
    result = optimize(problem, config, x0)

    assert len(result.history) <= 101
    assert result.final.value <= 0.5 * result.initial.value
    assert result.final.ripple <= 0.5 * result.initial.ripple
    assert result.final.constraints[0] <= 1e-3
    assert np.all(result.final.constraints[1:] <= 1e-6)

