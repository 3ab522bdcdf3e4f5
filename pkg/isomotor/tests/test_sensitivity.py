import numpy as np
import pytest
from conftest import coarse_data
from pytest import param
from scipy import sparse

from isomotor.cli import RunConfig, cmd_gradcheck
from isomotor.common.exceptions import ContractError
from isomotor.geometry import DesignSpace, DesignVector, ParameterSet, PhysicalDerivatives
from isomotor.sensitivity import (
    design_gradient,
    dT_dC,
    dT_dP,
    solve_adjoint,
    torque_stats_gradient,
    torque_state_gradient,
)
from isomotor.solver import TorqueProfile, solve_magnetostatic, torque


class TestTorqueStatistics:
    """mean and ripple gradients of a torque profile"""

    def test_three_angles(self):
        profile = TorqueProfile(np.arange(3.0), np.array([1.0, 2.0, 3.0]))
        mean_gradient, std_gradient, flat = torque_stats_gradient(profile, np.array([1.0, 0.0, 0.0]))

        assert not flat
        assert mean_gradient == pytest.approx(1.0 / 3.0)
        assert std_gradient == pytest.approx(-0.40825, abs=1e-5)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        torques = rng.standard_normal(5) + 4.0
        gradients = rng.standard_normal((5, 2))
        profile = TorqueProfile(np.arange(5.0), torques)
        mean_gradient, std_gradient, _ = torque_stats_gradient(profile, gradients)
        step = 1e-6

        for column in range(2):
            plus = TorqueProfile(profile.angles, torques + step * gradients[:, column])
            minus = TorqueProfile(profile.angles, torques - step * gradients[:, column])
            assert mean_gradient[column] == pytest.approx((plus.mean - minus.mean) / (2 * step), rel=1e-6)
            assert std_gradient[column] == pytest.approx((plus.std - minus.std) / (2 * step), rel=1e-5)

    def test_flat_profile(self):
        profile = TorqueProfile(np.arange(3.0), np.full(3, 2.0))
        mean_gradient, std_gradient, flat = torque_stats_gradient(profile, np.eye(3))

        assert flat
        assert np.allclose(mean_gradient, 1.0 / 3.0)
        assert not np.any(std_gradient)

    def test_gradient_count(self):
        profile = TorqueProfile(np.arange(3.0), np.array([1.0, 2.0, 3.0]))

        with pytest.raises(ContractError):
            torque_stats_gradient(profile, np.zeros((2, 4)))


def test_dT_dP_checks_the_row_count():
    physical = PhysicalDerivatives({}, np.zeros(17))

    with pytest.raises(ContractError):
        dT_dP(np.zeros(10), sparse.csc_matrix((12, 17)), physical, {}, 0.0)


def test_design_gradient_scales_to_the_box():
    parameters = ParameterSet.default()
    space = DesignSpace(parameters, 2)
    dtdp = np.ones(17)
    dtdc = np.array([0.0, 1.0, 2.0, 0.0])
    jacobian = sparse.csc_matrix(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    gradient = design_gradient(dtdp, dtdc, jacobian, space)

    assert np.allclose(gradient[:17], space.ranges[:17])
    assert np.allclose(gradient[17:], [1.0 * space.ranges[17], 2.0 * space.ranges[18]])
    with pytest.raises(ContractError):
        design_gradient(dtdp, dtdc, None, space)


@pytest.fixture(scope="module")
def bundle(coarse_problem, coarse_state):
    return coarse_problem.sensitivities(coarse_state)


@pytest.mark.usefixtures("cls_coarse_state")
class TestAdjointGradients:
    """adjoint torque derivatives on the coarse linear problem"""

    def _torques(self, x):
        initial = [solution.state for solution in self.state.result.solutions]
        return self.problem.solve(x, initial).result.profile.torques

    @pytest.mark.parametrize("name", ["WMAG", "MA", "DMAG", "OPERATING_ANGLE", "DC03"])
    def test_design_gradient_matches_finite_differences(self, bundle, name):
        index = self.problem.space.names.index(name)
        step = 1e-6
        shifted = np.array(self.state.x.x)
        shifted[index] += step
        plus = self._torques(DesignVector(shifted, self.problem.space))
        shifted[index] -= 2 * step
        minus = self._torques(DesignVector(shifted, self.problem.space))
        fd = (plus - minus) / (2 * step)
        analytic = bundle.gradients[:, index]
        scale = np.abs(bundle.gradients).max()

        assert np.allclose(analytic, fd, rtol=1e-3, atol=1e-4 * scale)

    def test_statistics_of_the_bundle(self, bundle):
        assert bundle.gradients.shape == (2, self.problem.space.size)
        assert np.allclose(bundle.mean_gradient, bundle.gradients.mean(axis=0))
        assert len(bundle.adjoints) == 2

    def test_state_gradient_is_the_torque_derivative(self):
        builder = self.state.builder
        solution = self.state.result.solutions[0]
        gradient = torque_state_gradient(builder, solution)

        # the torque is bilinear in (u_st, lambda)
        assert np.allclose(0.5 * gradient @ np.asarray(solution.state), torque(solution, builder))

    @pytest.mark.parametrize("kind", ["magnet_patches", "coil_patches"])
    def test_dT_dC_matches_finite_differences(self, kind):
        builder = self.state.builder
        geometry = self.state.geometry
        solution = self.state.result.solutions[0]
        dtdc = dT_dC(builder, solution, solve_adjoint(builder, solution))
        patch = geometry.metadata[kind][0]
        point = int(geometry.global_ids[patch][1, 1])
        step = 1e-8

        values = []
        for sign in (1.0, -1.0):
            points = geometry.control_points().copy()
            points[point, 0] += sign * step
            moved = builder.with_geometry(geometry.with_control_points(points))
            values.append(torque(solve_magnetostatic(moved, solution.beta, np.asarray(solution.state)), moved))
        fd = (values[0] - values[1]) / (2 * step)

        assert dtdc[2 * point] == pytest.approx(fd, rel=1e-3, abs=1e-6 * np.abs(dtdc).max())

    def test_pairing_is_checked(self):
        builder = self.state.builder
        first, second = self.state.result.solutions
        with pytest.raises(ContractError):
            dT_dC(builder, second, solve_adjoint(builder, first))


@pytest.mark.parametrize(
    "iron_permeability, threshold",
    [
        param(1000.0, 1e-5, id="linear"),
        param(None, 1e-3, id="nonlinear"),
    ],
)
@pytest.mark.parametrize("selection, count", [("params", 17), ("cp:10", 10)])
def test_gradient_check_suite(tmp_path, bundled_config, iron_permeability, threshold, selection, count):
    data = coarse_data(bundled_config)
    data["materials"]["iron_permeability"] = iron_permeability
    rows = cmd_gradcheck(RunConfig.from_dict(data), tmp_path, selection, threshold=threshold)

    assert len(rows) == count
    assert max(row.rel_error for row in rows) <= threshold
