from pathlib import Path

import pytest
from conftest import param_unit_values
from pytest import mark, param

from isomotor.common.exceptions import DomainError, NumericIntervalError
from isomotor.common.validators import (
    ExistingFileValidator,
    IntervalValidator,
    KnotVectorValidator,
    NameValidator,
    NonNegativeIntValidator,
    PathValidator,
    PositiveValidator,
    UnitIntervalValidator,
)


@pytest.mark.parametrize("value", param_unit_values)
def test_unit_interval_validator(value):
    UnitIntervalValidator().validate(value)


@pytest.mark.parametrize(
    "value",
    [
        -20,
        20,
        0.5,
        param(-21, marks=mark.xfail(raises=NumericIntervalError, reason="below -20")),
        param(20.5, marks=mark.xfail(raises=NumericIntervalError, reason="above 20")),
        param(True, marks=mark.xfail(raises=TypeError, reason="booleans are not numbers")),
    ],
)
def test_interval_validator(value):
    IntervalValidator(-20, 20, "OPERATING_ANGLE").validate(value)


@pytest.mark.parametrize(
    "value",
    [
        1e-12,
        3,
        param(0, marks=mark.xfail(raises=NumericIntervalError, reason="zero")),
        param(-1.5, marks=mark.xfail(raises=NumericIntervalError, reason="negative")),
        param("3", marks=mark.xfail(raises=TypeError, reason="not a numeric")),
    ],
)
def test_positive_validator(value):
    PositiveValidator().validate(value)


@pytest.mark.parametrize(
    "value",
    [
        0,
        4,
        param(-1, marks=mark.xfail(raises=NumericIntervalError, reason="negative")),
        param(2.0, marks=mark.xfail(raises=TypeError, reason="not an int")),
    ],
)
def test_non_negative_int_validator(value):
    NonNegativeIntValidator().validate(value)


@pytest.mark.parametrize(
    "knots, degree",
    [
        ([0, 0, 1, 1], 1),
        ([0, 0, 0, 0.5, 1, 1, 1], 2),
        ([0, 0, 0, 0.5, 0.5, 1, 1, 1], 2),
        param([0, 0, 1], 1, marks=mark.xfail(raises=DomainError, reason="too short")),
        param([0, 0, 0.7, 0.3, 1, 1], 1, marks=mark.xfail(raises=DomainError, reason="decreasing")),
        param([0, 0, 0.5, 1, 1], 2, marks=mark.xfail(raises=DomainError, reason="end multiplicity")),
        param([0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1], 2, marks=mark.xfail(raises=DomainError, reason="interior multiplicity")),
    ],
)
def test_knot_vector_validator(knots, degree):
    KnotVectorValidator().validate(knots, degree)


@pytest.mark.parametrize(
    "name",
    [
        "MW1",
        "OPERATING_ANGLE",
        param("mw1", marks=mark.xfail(raises=ValueError, reason="lower case")),
        param("1MW", marks=mark.xfail(raises=ValueError, reason="leading digit")),
        param("", marks=mark.xfail(raises=ValueError, reason="empty")),
        param(12, marks=mark.xfail(raises=TypeError, reason="not a string")),
    ],
)
def test_name_validator(name):
    NameValidator().validate(name)


@pytest.mark.parametrize(
    "path",
    [
        Path("."),
        ".",
        param(1, marks=mark.xfail(raises=TypeError, reason="not a path")),
    ],
)
def test_path_validator(path):
    PathValidator().validate(path)


def test_existing_file_validator(tmp_path):
    existing = tmp_path / "config.json"
    existing.write_text("{}", encoding="utf-8")
    ExistingFileValidator().validate(existing)

    with pytest.raises(FileNotFoundError):
        ExistingFileValidator().validate(tmp_path / "missing.json")
