"""Reluctivity models and the bundled material library"""

from ._reluctivity import (
    MU0,
    NU0,
    CurveReluctivity,
    LinearReluctivity,
    MaterialLibrary,
    ReluctivityModel,
    dnu_dB,
    load_bh_csv,
    nu,
)

__all__ = [
    "MU0",
    "NU0",
    "ReluctivityModel",
    "LinearReluctivity",
    "CurveReluctivity",
    "MaterialLibrary",
    "nu",
    "dnu_dB",
    "load_bh_csv",
]
