from dataclasses import replace

import numpy as np
import pytest
from conftest import COARSE_HARMONIC, annulus_patch, dirichlet_annulus, dirichlet_domain, square_patch
from scipy import sparse

from isomotor.assembly import SystemBuilder, harmonic_set
from isomotor.common.exceptions import ConfigError, LinearAlgebraError, SolverError
from isomotor.materials import NU0
from isomotor.solver import (
    TorqueProfile,
    angle_range,
    factorize,
    l2_error,
    point_load,
    sample_field,
    solve_dirichlet_problem,
    solve_magnetostatic,
    sweep,
    torque,
)
from isomotor.splines import MultiPatchGeometry, PatchRecord, uniform_refine


def _polar(x):
    return np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])


def exact_potential(x):
    r, theta = _polar(x)
    return np.sin(np.pi * (r - 1.0)) * np.sin(2.0 * theta)


def manufactured_source(x):
    """-nu0 laplace of the exact potential"""
    r, theta = _polar(x)
    radial = np.sin(np.pi * (r - 1.0))
    laplace = -(np.pi**2) * radial + np.pi * np.cos(np.pi * (r - 1.0)) / r - 4.0 * radial / r**2
    return -NU0 * np.sin(2.0 * theta) * laplace


def angular_source(x):
    _, theta = _polar(x)
    return np.sin(2.0 * theta + 0.3)


def exact_square(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def square_source(x):
    """-nu0 laplace of the exact square potential"""
    return 2.0 * np.pi**2 * NU0 * exact_square(x)


MANUFACTURED = {
    "annulus": (lambda degree, elements: dirichlet_annulus(elements), exact_potential, manufactured_source),
    "square": (lambda degree, elements: dirichlet_domain(square_patch(degree, elements)), exact_square, square_source),
}


@pytest.mark.parametrize("domain, degree", [("square", 1), ("square", 2), ("annulus", 2)])
def test_manufactured_solution_converges(linear_materials, domain, degree):
    build, exact, source = MANUFACTURED[domain]
    errors = []
    for elements in (8, 16, 32):
        geometry = build(degree, elements)
        u_points = solve_dirichlet_problem(geometry, linear_materials, {0: source})
        errors.append(l2_error(geometry, u_points, exact))

    slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    # L2 errors fall at order p + 1 under uniform refinement
    assert np.all(np.abs(slopes - (degree + 1)) < 0.2)


def split_annulus(coupled: bool, angular: int = 88) -> MultiPatchGeometry:
    """Annulus sector 1 < r < 2 cut at r = 1.5, as rotor and stator or as one conforming domain"""
    ends = {"south": "antiperiodic", "north": "antiperiodic"}
    inner_tags = {"west": "dirichlet", **ends, **({"east": "airgap"} if coupled else {})}
    outer_tags = {"east": "dirichlet", **ends, **({"west": "airgap"} if coupled else {})}
    inner = uniform_refine(annulus_patch(1.0, 1.5), 4, angular)
    outer = uniform_refine(annulus_patch(1.5, 2.0), 4, angular)
    return MultiPatchGeometry.from_records(
        [
            PatchRecord(inner, "air", "rotor", None, inner_tags),
            PatchRecord(outer, "air", "stator" if coupled else "rotor", None, outer_tags),
        ]
    )


def test_mortar_coupling_matches_a_conforming_solve(linear_materials):
    harmonics = harmonic_set(158)
    sources = {0: angular_source, 1: angular_source}

    coupled = split_annulus(coupled=True)
    builder = SystemBuilder(coupled, linear_materials, harmonics=harmonics, extra_quadrature=0)
    load = builder.dofs.restrict(point_load(coupled, sources, builder.rules))
    rhs = np.concatenate([load, np.zeros(builder.n_multipliers)])
    state = factorize(builder.jacobian(np.zeros(builder.size), 0.0)).solve(rhs)
    u_coupled = builder.point_values(state)

    conforming = split_annulus(coupled=False)
    u_conforming = solve_dirichlet_problem(conforming, linear_materials, sources)

    assert harmonics.size >= 40
    # outer edge of the inner patch, inner edge of the outer patch
    for patch, row in ((0, -1), (1, 0)):
        trace = u_coupled[coupled.global_ids[patch][row, :]]
        reference = u_conforming[conforming.global_ids[patch][row, :]]
        assert np.linalg.norm(trace - reference) <= 1e-6 * np.linalg.norm(reference)



def test_factorize_rejects_singular_matrices():
    with pytest.raises(LinearAlgebraError) as e_info:
        factorize(sparse.csc_matrix(np.array([[1.0, 0.0], [0.0, 0.0]])), angle=0.1)
    assert e_info.value.angle == 0.1


@pytest.mark.usefixtures("cls_coarse_geometry")
class TestLinearSolve:
    """coarse quarter machine with linear iron"""

    @pytest.fixture(autouse=True)
    def builder(self, linear_materials):
        self.builder = SystemBuilder(self.geometry, linear_materials, harmonics=harmonic_set(COARSE_HARMONIC))

    def test_residual_meets_the_tolerance(self):
        solution = solve_magnetostatic(self.builder, 0.0)
        residual = np.linalg.norm(self.builder.residual(np.array(solution.state), 0.0))

        assert solution.convergence.iterations == 1
        assert residual <= max(1e-12, 1e-10 * solution.rhs_norm)
        assert solution.factorization is not None
        assert not solution.state.flags.writeable

    def test_solution_views(self):
        solution = solve_magnetostatic(self.builder, 0.0)

        assert solution.u_rt.size == self.builder.dofs.n_rotor
        assert solution.u_st.size == self.builder.dofs.n_stator
        assert solution.multipliers.size == 2 * harmonic_set(COARSE_HARMONIC).size

    def test_warm_and_cold_sweeps_agree(self):
        angles = np.deg2rad([0.0, 0.5, 1.0])
        warm = sweep(self.builder, angles, warm_start=True)
        cold = sweep(self.builder, angles, warm_start=False, threads=2)

        scale = np.abs(warm.profile.torques).max()
        assert np.allclose(warm.profile.torques, cold.profile.torques, rtol=1e-6, atol=1e-8 * scale)
        assert warm.profile.symmetry_factor == 4
        assert [solution.beta for solution in cold.solutions] == pytest.approx(angles.tolist())

    def test_torque_is_finite(self):
        value = torque(solve_magnetostatic(self.builder, 0.01), self.builder)

        assert np.isfinite(value)
        assert value != 0.0

    def test_field_samples(self):
        solution = solve_magnetostatic(self.builder, 0.0)
        samples = sample_field(self.builder, solution, grid=(3, 3))
        magnitudes = np.array([sample.magnitude for sample in samples])

        assert len(samples) == 9 * len(self.geometry)
        assert np.all(np.isfinite(magnitudes))
        assert 0.1 < magnitudes.max() < 10.0

    @pytest.mark.parametrize("beta_deg", [0.7, 2.0, 5.5, 11.0, 23.0])
    def test_rotation_matches_a_rotated_rotor(self, beta_deg):
        beta = np.deg2rad(beta_deg)
        reference = torque(solve_magnetostatic(self.builder, beta), self.builder)
        # same electric angle with the coupling held at zero
        supply = self.builder.excitation
        excitation = replace(supply, phi0=supply.phi0 + supply.pole_pairs * beta)
        rotated = SystemBuilder(
            self.geometry.rotate_side("rotor", beta),
            self.builder.materials,
            excitation,
            harmonics=self.builder.harmonics,
        )
        turned = torque(solve_magnetostatic(rotated, 0.0), rotated)

        assert turned == pytest.approx(reference, rel=1e-4, abs=1e-8)

    @pytest.mark.parametrize("beta_deg", [0.0, 4.0])
    def test_torque_repeats_every_slot_pitch(self, beta_deg):
        angles = np.deg2rad([beta_deg, beta_deg + 30.0])
        profile = sweep(self.builder, angles, warm_start=False).profile

        assert profile.torques[1] == pytest.approx(profile.torques[0], rel=1e-6)
        assert profile.symmetry_factor == 4
        assert np.array_equal(profile.full_torques, 4 * profile.torques)

    def test_torque_is_the_coenergy_derivative(self):
        beta, step = np.deg2rad(3.0), 1e-4
        supply = self.builder.excitation

        def frozen(angle):
            # phase currents held at their value for beta
            excitation = replace(supply, phi0=supply.phi0 + supply.pole_pairs * (beta - angle))
            return SystemBuilder(self.geometry, self.builder.materials, excitation, harmonics=self.builder.harmonics)

        coenergy = []
        for angle in (beta + step, beta - step):
            builder = frozen(angle)
            solution = solve_magnetostatic(builder, angle)
            coenergy.append(0.5 * builder.source(angle) @ np.asarray(solution.state))
        reference = torque(solve_magnetostatic(self.builder, beta), self.builder)

        assert reference == pytest.approx((coenergy[0] - coenergy[1]) / (2 * step), rel=1e-5)



@pytest.mark.usefixtures("cls_coarse_geometry")
class TestNonlinearSolve:
    """coarse quarter machine with the M27 curve"""

    @pytest.fixture(autouse=True)
    def builder(self, nonlinear_materials):
        self.builder = SystemBuilder(self.geometry, nonlinear_materials, harmonics=harmonic_set(COARSE_HARMONIC))

    def test_newton_converges(self):
        solution = solve_magnetostatic(self.builder, 0.0, rtol=1e-10, atol=np.finfo(float).tiny)
        relative = np.array(solution.convergence.residuals) / solution.rhs_norm

        assert 1 < solution.convergence.iterations <= 25
        assert relative[-1] <= 1e-10
        assert solution.factorization is None
        # quadratic once inside the basin
        tail = np.flatnonzero(relative[:-1] < 1e-4)
        assert np.all(relative[tail + 1] <= 0.1 * relative[tail])
        assert relative[-1] <= 0.1 * relative[-2]

        restarted = solve_magnetostatic(self.builder, 0.0, initial=solution.state)
        assert restarted.convergence.iterations == 1

    def test_torque_repeats_every_slot_pitch(self):
        profile = sweep(self.builder, np.deg2rad([2.0, 32.0]), warm_start=False).profile

        assert profile.torques[1] == pytest.approx(profile.torques[0], rel=1e-6)

    def test_iteration_cap(self):
        with pytest.raises(SolverError) as e_info:
            solve_magnetostatic(self.builder, 0.0, max_iter=1)
        assert e_info.value.angle == 0.0
        assert len(e_info.value.residuals) >= 1


class TestTorqueProfile:
    """statistics of a torque profile"""

    def test_statistics(self):
        profile = TorqueProfile(np.arange(3.0), np.array([1.0, 2.0, 3.0]), symmetry_factor=4)

        assert profile.mean == pytest.approx(2.0)
        assert profile.std == pytest.approx(np.sqrt(2.0 / 3.0))
        assert profile.full_mean == pytest.approx(8.0)
        assert np.allclose(profile.full_torques, [4.0, 8.0, 12.0])

    @pytest.mark.parametrize("angles, torques", [([], []), ([0.0, 1.0], [1.0])])
    def test_invalid_profiles(self, angles, torques):
        with pytest.raises(ConfigError):
            TorqueProfile(np.array(angles), np.array(torques))


def test_angle_range():
    angles = angle_range(0.0, 30.0, 1.0)

    assert angles.size == 30
    assert angles[-1] == pytest.approx(np.deg2rad(29.0))
    assert angle_range(0.0, 1.0, 0.25).size == 4


@pytest.mark.parametrize("start, stop, step", [(0.0, 30.0, 0.0), (5.0, 5.0, 1.0), (10.0, 0.0, 1.0)])
def test_invalid_angle_ranges(start, stop, step):
    with pytest.raises(ConfigError):
        angle_range(start, stop, step)


def test_empty_sweep(coarse_geometry, linear_materials):
    builder = SystemBuilder(coarse_geometry, linear_materials, harmonics=harmonic_set(COARSE_HARMONIC))

    with pytest.raises(ConfigError):
        sweep(builder, [])
