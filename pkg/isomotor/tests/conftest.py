import numpy as np
import pytest
from pytest import mark, param

from isomotor import settings
from isomotor.cli import RunConfig
from isomotor.common.exceptions import NumericIntervalError
from isomotor.geometry import MachineTemplate, TemplateResolution
from isomotor.materials import MaterialLibrary
from isomotor.splines import EDGES, BasisFunctionSet, KnotVector, MultiPatchGeometry, NurbsPatch, PatchRecord, uniform_refine

# Standard test:
# python -m pytest isomotor/tests/
# Test w/ coverage:
# python -m pytest --cov=isomotor isomotor/tests/

settings.threads = 1

# coarse runs: 6 harmonics fit the 7 airgap cells of the coarse template
COARSE_HARMONIC = 22
COARSE_ANGLES_DEG = [0.0, 1.0]


def annulus_patch(
    r_inner: float = 1.0,
    r_outer: float = 2.0,
    start: float = 0.0,
    stop: float = np.pi / 2,
    elements: int = 1,
) -> NurbsPatch:
    """Exact biquadratic annulus sector, xi radial and eta angular"""
    half = 0.5 * (stop - start)
    middle = 0.5 * (stop + start)
    arc = np.array(
        [
            [np.cos(start), np.sin(start)],
            [np.cos(middle) / np.cos(half), np.sin(middle) / np.cos(half)],
            [np.cos(stop), np.sin(stop)],
        ]
    )
    radii = np.array([r_inner, 0.5 * (r_inner + r_outer), r_outer])
    control_points = radii[:, None, None] * arc[None, :, :]
    weights = np.tile([1.0, np.cos(half), 1.0], (3, 1))
    basis = BasisFunctionSet(KnotVector.uniform(2), KnotVector.uniform(2), weights)
    patch = NurbsPatch(basis, control_points)
    if elements > 1:
        patch = uniform_refine(patch, elements, elements)
    return patch


def square_patch(degree: int = 2, elements: int = 1) -> NurbsPatch:
    """Unit square mapped onto itself by a B-spline patch of the given degree"""
    grid = np.linspace(0.0, 1.0, degree + 1)
    control_points = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1)
    patch = NurbsPatch(BasisFunctionSet(KnotVector.uniform(degree), KnotVector.uniform(degree)), control_points)
    if elements > 1:
        patch = uniform_refine(patch, elements, elements)
    return patch


def dirichlet_domain(patch: NurbsPatch, material: str = "air") -> MultiPatchGeometry:
    """Single patch domain clamped on every edge"""
    record = PatchRecord(patch, material, "rotor", None, {edge: "dirichlet" for edge in EDGES})
    return MultiPatchGeometry.from_records([record])


def dirichlet_annulus(elements: int = 1, material: str = "air") -> MultiPatchGeometry:
    """Single patch annulus sector clamped on every edge"""
    return dirichlet_domain(annulus_patch(elements=elements), material)


def coarse_data(base: RunConfig) -> dict:
    """Bundled configuration shrunk to the coarse template with linear iron"""
    data = base.to_dict()
    data["materials"]["iron_permeability"] = 1000.0
    data["discretization"] = {"resolution": "coarse", "max_harmonic": COARSE_HARMONIC, "extra_quadrature_points": 0}
    data["angles_deg"] = list(COARSE_ANGLES_DEG)
    return data


param_unit_values = [
    0,
    1,
    0.5,
    param(-0.1, marks=mark.xfail(raises=NumericIntervalError, reason="below 0")),
    param(1.1, marks=mark.xfail(raises=NumericIntervalError, reason="above 1")),
    param("1", marks=mark.xfail(raises=TypeError, reason="not a numeric")),
]


@pytest.fixture(scope="session")
def bundled_config():
    return RunConfig.default()


@pytest.fixture(scope="session")
def coarse_config(bundled_config):
    return RunConfig.from_dict(coarse_data(bundled_config))


@pytest.fixture(scope="class")
def cls_coarse_config(request):
    request.cls.config: RunConfig = request.getfixturevalue("coarse_config")


@pytest.fixture(scope="session")
def linear_materials():
    return MaterialLibrary.from_options(None, iron_permeability=1000.0)


@pytest.fixture(scope="session")
def nonlinear_materials():
    return MaterialLibrary.from_options("m27.csv")


@pytest.fixture(scope="session")
def coarse_template():
    return MachineTemplate(TemplateResolution.coarse())


@pytest.fixture(scope="session")
def coarse_geometry(coarse_template):
    return coarse_template.build(coarse_template.reference)


@pytest.fixture(scope="class")
def cls_coarse_geometry(request):
    request.cls.template: MachineTemplate = request.getfixturevalue("coarse_template")
    request.cls.geometry: MultiPatchGeometry = request.getfixturevalue("coarse_geometry")


@pytest.fixture(scope="session")
def coarse_problem(coarse_config):
    return coarse_config.problem()


@pytest.fixture(scope="session")
def coarse_state(coarse_problem):
    x = coarse_problem.space.compose(coarse_problem.template.reference)
    return coarse_problem.solve(x)


@pytest.fixture(scope="class")
def cls_coarse_state(request):
    request.cls.problem = request.getfixturevalue("coarse_problem")
    request.cls.state = request.getfixturevalue("coarse_state")
