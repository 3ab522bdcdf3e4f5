"""Command line surface: run configuration, subcommands and the entry point"""

from ._commands import GradientRow, cmd_evaluate, cmd_export_geometry, cmd_gradcheck, cmd_optimize, write_csv, write_json
from ._config import DesignFile, Discretization, ExcitationOptions, MaterialOptions, RunConfig, merged_angles, parse_angles
from ._main import EXIT_CODES, build_parser, main

__all__ = [
    "MaterialOptions",
    "ExcitationOptions",
    "Discretization",
    "RunConfig",
    "DesignFile",
    "parse_angles",
    "merged_angles",
    "GradientRow",
    "write_csv",
    "write_json",
    "cmd_evaluate",
    "cmd_gradcheck",
    "cmd_optimize",
    "cmd_export_geometry",
    "EXIT_CODES",
    "build_parser",
    "main",
]
