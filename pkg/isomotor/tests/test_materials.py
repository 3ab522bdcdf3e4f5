import numpy as np
import pytest
from pytest import mark, param

from isomotor.common.exceptions import ConfigError, NumericIntervalError
from isomotor.materials import (
    MU0,
    NU0,
    CurveReluctivity,
    LinearReluctivity,
    MaterialLibrary,
    dnu_dB,
    load_bh_csv,
    nu,
)

FLUX_DENSITIES = np.array([0.0, 0.1, 0.55, 1.33, 1.87, 2.25, 3.0])


@pytest.fixture(scope="class")
def cls_m27(request):
    request.cls.curve: CurveReluctivity = request.getfixturevalue("nonlinear_materials")["iron"]


@pytest.mark.usefixtures("cls_m27")
class TestCurveReluctivity:
    """bundled M27 curve"""

    def test_positive(self):
        values = nu(self.curve, FLUX_DENSITIES)

        assert np.all(np.isfinite(values))
        assert np.all(values > 0)

    def test_monotone_field_strength(self):
        grid = np.linspace(0.0, 3.0, 301)

        assert np.all(np.diff(self.curve.field_strength(grid)) > 0)

    def test_samples_are_interpolated(self):
        b, h = self.curve.samples

        assert np.allclose(self.curve.field_strength(b), h)

    def test_vacuum_extrapolation(self):
        b, h = self.curve.samples
        beyond = b[-1] + 0.5

        assert self.curve.nu(beyond) * beyond == pytest.approx(h[-1] + NU0 * 0.5)
        assert self.curve.differential(beyond) == pytest.approx(NU0)

    def test_continuity_at_first_sample(self):
        b1 = self.curve.samples[0][1]
        below, above = self.curve.nu(np.array([b1 * (1 - 1e-9), b1 * (1 + 1e-9)]))

        assert below == pytest.approx(above, rel=1e-6)

    @pytest.mark.parametrize("flux_density", [0.1, 0.55, 1.33, 1.87, 2.25, 3.0])
    def test_derivative(self, flux_density):
        step = 1e-6
        fd = (self.curve.nu(flux_density + step) - self.curve.nu(flux_density - step)) / (2 * step)

        assert dnu_dB(self.curve, flux_density) == pytest.approx(fd, rel=1e-5, abs=1e-3)


def test_linear_reluctivity():
    model = LinearReluctivity.from_relative_permeability(1000.0)

    assert model.is_linear
    assert np.allclose(model.nu(FLUX_DENSITIES), 1.0 / (1000.0 * MU0))
    assert np.allclose(model.dnu_dB(FLUX_DENSITIES), 0.0)
    with pytest.raises(NumericIntervalError):
        LinearReluctivity(0.0)


@pytest.mark.parametrize(
    "b, h",
    [
        ([0.0, 1.0, 2.0, 2.5], [0.0, 100.0, 2000.0, 500000.0]),
        param([0.0, 1.0], [0.0, 100.0], marks=mark.xfail(raises=ConfigError, reason="too few rows")),
        param([0.1, 1.0, 2.0], [0.0, 100.0, 1e6], marks=mark.xfail(raises=ConfigError, reason="not from the origin")),
        param([0.0, 2.0, 1.0], [0.0, 100.0, 1e6], marks=mark.xfail(raises=ConfigError, reason="not increasing")),
        param([0.0, 1.0, 2.0], [0.0, 100.0, 200.0], marks=mark.xfail(raises=ConfigError, reason="too flat to join vacuum")),
    ],
)
def test_curve_validation(b, h):
    CurveReluctivity(np.array(b), np.array(h))


def test_load_bh_csv(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("B_tesla,H_A_per_m\n0,0\n1,100\n2,1000000\n", encoding="utf-8")
    b, h = load_bh_csv(good)

    assert np.allclose(b, [0, 1, 2])
    assert np.allclose(h, [0, 100, 1e6])

    bad = tmp_path / "bad.csv"
    bad.write_text("B,H\n0,0\n1,100\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_bh_csv(bad)


class TestMaterialLibrary:
    """name lookup and construction options"""

    def test_linear_option(self, linear_materials):
        assert linear_materials.is_linear
        assert linear_materials["air"].nu(1.0) == pytest.approx(NU0)
        assert linear_materials["magnet"].nu(1.0) == pytest.approx(NU0 / 1.05)

    def test_curve_option(self, nonlinear_materials):
        assert not nonlinear_materials.is_linear

    def test_unknown_material(self, linear_materials):
        with pytest.raises(ConfigError):
            linear_materials["steel"]

    @pytest.mark.parametrize(
        "bh_curve, permeability",
        [
            (None, None),
            ("no_such_curve.csv", None),
        ],
    )
    def test_invalid_options(self, bh_curve, permeability):
        with pytest.raises(ConfigError):
            MaterialLibrary.from_options(bh_curve, permeability)
