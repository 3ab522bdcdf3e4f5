import numpy as np
import pytest
from conftest import COARSE_HARMONIC, dirichlet_annulus
from pytest import mark, param

from isomotor.assembly import (
    DofMap,
    ExcitationState,
    SystemBuilder,
    coil_areas,
    gauss_points,
    harmonic_set,
    max_admissible_harmonic,
    point_stiffness,
    rotation_matrix,
)
from isomotor.common.exceptions import ConfigError
from isomotor.splines import KnotVector


def test_harmonic_set():
    assert harmonic_set(COARSE_HARMONIC).tolist() == [2, 6, 10, 14, 18, 22]
    assert harmonic_set(102).size == 26
    with pytest.raises(ConfigError):
        harmonic_set(1)


def test_gauss_points_integrate_polynomials():
    points, weights = gauss_points(KnotVector.uniform(2, 3), 2)

    assert points.size == 6
    assert weights.sum() == pytest.approx(1.0)
    assert np.sum(weights * points**3) == pytest.approx(0.25)


@pytest.mark.parametrize("beta", [0.0, 0.1, -0.7])
def test_rotation_matrix(beta):
    harmonics = harmonic_set(10)
    matrix = rotation_matrix(beta, harmonics).toarray()
    step = 1e-6
    fd = (rotation_matrix(beta + step, harmonics) - rotation_matrix(beta - step, harmonics)).toarray() / (2 * step)

    assert matrix.shape == (6, 6)
    assert np.allclose(matrix @ matrix.T, np.eye(6))
    assert np.allclose(rotation_matrix(beta, harmonics, derivative=True).toarray(), fd, atol=1e-6)


def test_rotation_matrix_at_zero():
    assert np.allclose(rotation_matrix(0.0, harmonic_set(22)).toarray(), np.eye(12))


@pytest.mark.parametrize(
    "pole_pairs, coil_area",
    [
        (2, None),
        (1, 1e-4),
        param(0, None, marks=mark.xfail(raises=ConfigError, reason="no pole pairs")),
        param(2, 0.0, marks=mark.xfail(raises=ConfigError, reason="empty coil")),
    ],
)
def test_excitation_state(pole_pairs, coil_area):
    ExcitationState(pole_pairs=pole_pairs, coil_area=coil_area)


def test_excitation_phases():
    excitation = ExcitationState(phi0=0.2).at(0.1)

    assert excitation.beta == 0.1
    assert excitation.electric_angle(0) == pytest.approx(0.4)
    assert excitation.electric_angle(1) - excitation.electric_angle(0) == pytest.approx(2 * np.pi / 3)


class TestStiffness:
    """point level stiffness on a single iron sector"""

    @pytest.fixture(autouse=True)
    def sector(self, nonlinear_materials, linear_materials):
        self.geometry = dirichlet_annulus(2, "iron")
        self.nonlinear = nonlinear_materials
        self.linear = linear_materials
        # A_z = 1.2 x has a uniform 1.2 T field
        self.u = 1.2 * self.geometry.control_points()[:, 0]

    def test_constants_are_in_the_kernel(self):
        matrix = point_stiffness(self.geometry, self.nonlinear, self.u)

        assert np.allclose(matrix @ np.ones(self.geometry.n_points), 0.0, atol=1e-8 * abs(matrix).max())
        assert abs(matrix - matrix.T).max() <= 1e-10 * abs(matrix).max()

    def test_newton_jacobian_of_linear_material(self):
        plain = point_stiffness(self.geometry, self.linear, self.u)
        newton = point_stiffness(self.geometry, self.linear, self.u, newton=True)

        assert abs(plain - newton).max() == 0.0

    def test_newton_jacobian_matches_finite_differences(self):
        direction = np.random.default_rng(7).standard_normal(self.geometry.n_points) * 1e-2
        step = 1e-6

        def residual(u):
            return point_stiffness(self.geometry, self.nonlinear, u) @ u

        fd = (residual(self.u + step * direction) - residual(self.u - step * direction)) / (2 * step)
        analytic = point_stiffness(self.geometry, self.nonlinear, self.u, newton=True) @ direction

        assert np.allclose(analytic, fd, rtol=1e-5, atol=1e-5 * np.abs(analytic).max())


@pytest.mark.usefixtures("cls_coarse_geometry")
class TestCoarseSystem:
    """saddle point system of the coarse quarter machine"""

    @pytest.fixture(autouse=True)
    def builder(self, linear_materials):
        self.materials = linear_materials
        self.builder = SystemBuilder(self.geometry, linear_materials, harmonics=harmonic_set(COARSE_HARMONIC))

    def test_dofs(self):
        dofs = self.builder.dofs
        u = np.arange(1.0, dofs.size + 1.0)
        points = dofs.to_points(u)

        assert dofs.size == dofs.n_rotor + dofs.n_stator
        assert np.all(points[self.geometry.dirichlet] == 0.0)
        for slave, master in self.geometry.antiperiodic:
            assert points[slave] == -points[master]
        assert np.allclose(dofs.restrict(points), dofs.prolongation.T @ points)

    def test_coupling_shapes(self):
        columns = 2 * harmonic_set(COARSE_HARMONIC).size

        assert self.builder.G_rt.shape == (self.builder.dofs.n_rotor, columns)
        assert self.builder.G_st.shape == (self.builder.dofs.n_stator, columns)
        assert self.builder.size == self.builder.dofs.size + columns

    def test_too_many_harmonics(self):
        with pytest.raises(ConfigError):
            SystemBuilder(self.geometry, self.materials, harmonics=harmonic_set(102))

    def test_max_admissible_harmonic(self):
        highest = max_admissible_harmonic(self.geometry)

        assert COARSE_HARMONIC <= highest < 102
        SystemBuilder(self.geometry, self.materials, harmonics=harmonic_set(highest))

    def test_length_must_be_positive(self):
        with pytest.raises(ConfigError):
            SystemBuilder(self.geometry, self.materials, length=0.0, harmonics=harmonic_set(COARSE_HARMONIC))

    def test_coil_areas(self):
        areas = coil_areas(self.geometry)

        assert len(areas) > 0
        assert all(area > 0 for area in areas.values())

    @pytest.mark.parametrize("beta", [0.0, 0.03])
    def test_assembled_blocks_match_the_jacobian(self, beta):
        state = np.zeros(self.builder.size)
        system = self.builder.assemble(beta)

        assert abs(system.matrix() - self.builder.jacobian(state, beta)).max() <= 1e-9 * abs(system.matrix()).max()
        assert np.allclose(system.rhs(), self.builder.source(beta))
        assert np.allclose(self.builder.residual(state, beta), -self.builder.source(beta))

    def test_jacobian_is_symmetric(self):
        matrix = self.builder.jacobian(np.zeros(self.builder.size), 0.02)

        assert abs(matrix - matrix.T).max() <= 1e-10 * abs(matrix).max()

    def test_with_geometry_keeps_the_topology(self):
        moved = self.builder.with_geometry(self.geometry.with_control_points(1.001 * self.geometry.control_points()))

        assert moved.dofs is self.builder.dofs
        assert moved.size == self.builder.size
        assert np.array_equal(moved.harmonics, self.builder.harmonics)


def test_clamped_sector_keeps_interior_unknowns():
    dofs = DofMap(dirichlet_annulus(2))

    assert dofs.size == 4
    assert dofs.n_stator == 0
