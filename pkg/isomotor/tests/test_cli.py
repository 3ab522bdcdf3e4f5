import csv
import json

import numpy as np
import pytest
from conftest import coarse_data
from pytest import mark, param

from isomotor.cli import EXIT_CODES, DesignFile, RunConfig, main, merged_angles, parse_angles, write_csv
from isomotor.common.exceptions import ConfigError


def _rows(file_path):
    with open(file_path, "r", encoding="utf-8") as fio:
        return list(csv.reader(fio))


@pytest.fixture
def config_file(tmp_path, bundled_config):
    data = coarse_data(bundled_config)
    data["optimization"]["target_torque"] = 1.0
    data["optimization"]["max_iterations"] = 1
    data["field_grid"] = [2, 3]
    file_path = tmp_path / "config.json"
    file_path.write_text(json.dumps(data), encoding="utf-8")
    return str(file_path)


@pytest.mark.parametrize(
    "text, expected_deg",
    [
        ("0:3:1", [0.0, 1.0, 2.0]),
        ("0, 1.5", [0.0, 1.5]),
        ("7", [7.0]),
        param("a:b:c", [], marks=mark.xfail(raises=ConfigError, reason="not numbers")),
        param(" , ", [], marks=mark.xfail(raises=ConfigError, reason="empty list")),
        param("3:0:1", [], marks=mark.xfail(raises=ConfigError, reason="empty range")),
    ],
)
def test_parse_angles(text, expected_deg):
    assert np.allclose(parse_angles(text), np.deg2rad(expected_deg))


class TestRunConfig:
    """configuration file handling"""

    def test_bundled(self, bundled_config):
        assert bundled_config.angles().size == 30
        assert bundled_config.discretization.resolution == "default"
        assert bundled_config.excitation.phase_reference_deg == -30.0

    def test_round_trip(self, tmp_path, coarse_config):
        file_path = tmp_path / "config.json"
        coarse_config.dump_json(file_path)
        loaded = RunConfig.load_json(file_path)

        assert loaded.parameters == coarse_config.parameters
        assert loaded.discretization == coarse_config.discretization
        assert np.allclose(loaded.angles(), coarse_config.angles())

    def test_angle_override(self, coarse_config):
        assert merged_angles(coarse_config, None) is coarse_config
        assert np.allclose(merged_angles(coarse_config, "0,2").angles(), np.deg2rad([0.0, 2.0]))

    @pytest.mark.parametrize(
        "change",
        [
            lambda data: data.pop("geometry"),
            lambda data: data["materials"].update({"steel": 1.0}),
            lambda data: data["discretization"].update({"resolution": "ultra"}),
            lambda data: data.update({"angles_deg": []}),
            lambda data: data.update({"angles_deg": {"start": 0.0, "stop": 1.0}}),
        ],
    )
    def test_invalid(self, bundled_config, change):
        data = bundled_config.to_dict()
        change(data)
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            RunConfig.load_json(tmp_path / "missing.json")


def test_write_csv(tmp_path):
    file_path = tmp_path / "table.csv"
    write_csv(file_path, ("name", "value"), [("a", 0.1), ("b", 2)])

    assert file_path.read_text(encoding="utf-8") == "name,value\na,0.10000000000000001\nb,2\n"


class TestMain:
    """subcommands through the entry point"""

    def test_evaluate(self, config_file, tmp_path):
        out = tmp_path / "evaluate"

        assert main(["evaluate", "-c", config_file, "-o", str(out)]) == EXIT_CODES["ok"]
        torques = _rows(out / "torque.csv")
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))

        assert torques[0] == ["beta_deg", "torque_Nm"]
        assert len(torques) == 3
        assert len(_rows(out / "field.csv")) == 128 * 6 + 1
        assert summary["angles"] == 2
        assert summary["symmetry_factor"] == 4
        assert summary["mean_torque"] == pytest.approx(4 * summary["sector_mean_torque"])
        assert summary["mean_torque"] == pytest.approx(np.mean([float(row[1]) for row in torques[1:]]))

    def test_angles_argument(self, config_file, tmp_path):
        out = tmp_path / "single"

        assert main(["evaluate", "-c", config_file, "-o", str(out), "--angles", "0.5"]) == EXIT_CODES["ok"]
        assert len(_rows(out / "torque.csv")) == 2

    def test_export_and_reload(self, config_file, tmp_path):
        exported = tmp_path / "export"

        assert main(["export-geometry", "-c", config_file, "-o", str(exported)]) == EXIT_CODES["ok"]
        design = DesignFile.load_json(exported / "design.json")
        net = _rows(exported / "control_points.csv")

        assert len(design.offsets_mm) == 16
        assert not any(design.offsets_mm)
        assert net[0] == ["patch", "label", "side", "i", "j", "id", "x", "y", "weight"]
        assert {int(row[0]) for row in net[1:]} == set(range(128))

        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["evaluate", "-c", config_file, "-o", str(first)]) == EXIT_CODES["ok"]
        design_file = str(exported / "design.json")
        assert main(["evaluate", "-c", config_file, "-o", str(second), "--design", design_file]) == EXIT_CODES["ok"]
        before = np.array(_rows(first / "torque.csv")[1:], dtype=float)
        after = np.array(_rows(second / "torque.csv")[1:], dtype=float)
        assert np.allclose(before, after, rtol=1e-9)

    def test_gradcheck(self, config_file, tmp_path):
        out = tmp_path / "gradcheck"
        args = ["gradcheck", "-c", config_file, "-o", str(out), "--coordinates", "WMAG", "--threshold", "1e-3"]

        assert main(args) == EXIT_CODES["ok"]
        rows = _rows(out / "gradcheck.csv")
        assert rows[0] == ["coordinate", "analytic", "fd", "rel_error"]
        assert rows[1][0] == "WMAG"
        assert float(rows[1][3]) <= 1e-3

        assert main(args + ["--inject-fault"]) == EXIT_CODES["gradcheck"]
        assert float(_rows(out / "gradcheck.csv")[1][3]) > 1e-3

    def test_unknown_coordinate(self, config_file, tmp_path):
        args = ["gradcheck", "-c", config_file, "-o", str(tmp_path), "--coordinates", "NOPE"]

        assert main(args) == EXIT_CODES["config"]

    def test_optimize(self, config_file, tmp_path):
        out = tmp_path / "optimize"

        assert main(["optimize", "-c", config_file, "-o", str(out), "--mode", "param"]) == EXIT_CODES["ok"]
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        history = _rows(out / "history.csv")

        assert report["mode"] == "param"
        assert report["target_torque"] == 1.0
        assert history[0][-1] == "phase"
        assert len(history) >= 2
        assert DesignFile.load_json(out / "design.json").symmetric

    def test_optimize_is_deterministic(self, config_file, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"

        for out in (first, second):
            assert main(["optimize", "-c", config_file, "-o", str(out), "--mode", "combined"]) == EXIT_CODES["ok"]
        assert (first / "history.csv").read_bytes() == (second / "history.csv").read_bytes()

    def test_optimized_design_reloads(self, config_file, tmp_path):
        optimized, evaluated = tmp_path / "optimize", tmp_path / "evaluate"

        assert main(["optimize", "-c", config_file, "-o", str(optimized), "--mode", "combined"]) == EXIT_CODES["ok"]
        design_file = str(optimized / "design.json")
        assert main(["evaluate", "-c", config_file, "-o", str(evaluated), "--design", design_file]) == EXIT_CODES["ok"]
        final = json.loads((optimized / "report.json").read_text(encoding="utf-8"))["final"]
        summary = json.loads((evaluated / "summary.json").read_text(encoding="utf-8"))

        assert summary["mean_torque"] == pytest.approx(final["mean_torque"], rel=1e-10)
        assert summary["ripple"] == pytest.approx(final["ripple"], rel=1e-10)
        assert summary["magnet_area"] == pytest.approx(final["magnet_area"], rel=1e-10)


    @pytest.mark.parametrize(
        "content",
        [
            None,
            "{ not json",
            '{"materials": {}}',
        ],
    )
    def test_config_errors(self, tmp_path, content):
        file_path = tmp_path / "config.json"
        if content is not None:
            file_path.write_text(content, encoding="utf-8")

        assert main(["evaluate", "-c", str(file_path), "-o", str(tmp_path / "out")]) == EXIT_CODES["config"]
