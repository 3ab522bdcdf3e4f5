"""Command line entry point"""

from __future__ import annotations

import argparse
import json
import logging
from typing import List, Optional

from isomotor._settings import settings
from isomotor.common.exceptions import (
    ConfigError,
    ContractError,
    DomainError,
    GeometryError,
    GradientCheckError,
    NumericIntervalError,
    SolverError,
)

from ._commands import cmd_evaluate, cmd_export_geometry, cmd_gradcheck, cmd_optimize
from ._config import DesignFile, RunConfig, merged_angles

__all__ = ["EXIT_CODES", "build_parser", "main"]

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "ok": 0,
    "config": 2,
    "geometry": 3,
    "solver": 4,
    "gradcheck": 5,
}

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-c",
        "--config",
        help="run configuration JSON | " "Default: bundled configuration | " "Type: %(type)s ",
        default=None,
        type=str,
    )
    parser.add_argument(
        "-o",
        "--out",
        help="output directory | " "Default: the configured output | " "Type: %(type)s ",
        default=None,
        type=str,
    )
    parser.add_argument(
        "--angles",
        help="rotor angles in degrees, 'start:stop:step' or a comma list | " "Default: %(default)s | " "Type: %(type)s ",
        default=None,
        type=str,
    )
    parser.add_argument(
        "--threads",
        help="worker threads for cold sweeps and sensitivities | " "Default: %(default)s | " "Type: %(type)s ",
        default=None,
        type=int,
    )
    parser.add_argument(
        "--log-level",
        help="logging level | " "Default: %(default)s | " "Type: %(type)s ",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str,
    )
    parser.add_argument(
        "--seed",
        help="seed for randomly chosen test coordinates | " "Default: %(default)s | " "Type: %(type)s ",
        default=0,
        type=int,
    )


def _design_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--design",
        help="design file written by optimize or export-geometry | " "Default: %(default)s | " "Type: %(type)s ",
        default=None,
        type=str,
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with the four subcommands"""
    parser = argparse.ArgumentParser(prog="isomotor")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("evaluate", help="torque sweep and field samples of a design")
    _common(evaluate)
    _design_argument(evaluate)

    gradcheck = commands.add_parser("gradcheck", help="analytic derivatives against central differences")
    _common(gradcheck)
    gradcheck.add_argument(
        "--coordinates",
        help="'all', 'params', 'offsets', names like 'WMAG,DC03' or 'cp:N' | " "Default: %(default)s | " "Type: %(type)s ",
        default="params",
        type=str,
    )
    gradcheck.add_argument(
        "--quantity",
        help="differentiated quantity | " "Default: %(default)s | " "Type: %(type)s ",
        default="mean_torque",
        choices=["mean_torque", "ripple", "objective"],
        type=str,
    )
    gradcheck.add_argument(
        "--fd-step",
        help="central difference step, unit box or meters for 'cp:N' | " "Default: 1e-6 or 1e-7 | " "Type: %(type)s ",
        default=None,
        type=float,
    )
    gradcheck.add_argument(
        "--threshold",
        help="largest accepted relative error | " "Default: %(default)s | " "Type: %(type)s ",
        default=1e-5,
        type=float,
    )
    gradcheck.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    optimize = commands.add_parser("optimize", help="optimize the design")
    _common(optimize)
    _design_argument(optimize)
    optimize.add_argument(
        "--mode",
        help="design coordinates that move | " "Default: the configured mode | " "Type: %(type)s ",
        default=None,
        choices=["param", "shape", "sequential", "combined"],
        type=str,
    )

    export = commands.add_parser("export-geometry", help="design file and control net of a design")
    _common(export)
    _design_argument(export)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, GradientCheckError):
        return EXIT_CODES["gradcheck"]
    if isinstance(exc, GeometryError):
        return EXIT_CODES["geometry"]
    if isinstance(exc, (SolverError, ContractError)):
        return EXIT_CODES["solver"]
    return EXIT_CODES["config"]


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    logger.info("Isomotor Starting | " "Command: {} | " "Config: {} ".format(args.command, args.config or "bundled"))

    try:
        config = RunConfig.default() if args.config is None else RunConfig.load_json(args.config)
        config = merged_angles(config, args.angles)
        if args.threads is not None:
            settings.threads = args.threads
        out = args.out or config.output
        design = DesignFile.load_json(args.design) if getattr(args, "design", None) else None

        if args.command == "evaluate":
            cmd_evaluate(config, out, design, args.threads)
        elif args.command == "gradcheck":
            cmd_gradcheck(
                config,
                out,
                args.coordinates,
                args.quantity,
                args.fd_step,
                args.threshold,
                args.seed,
                args.threads,
                args.inject_fault,
            )
        elif args.command == "optimize":
            if args.mode is not None:
                config.optimization.mode = args.mode
            report = cmd_optimize(config, out, args.threads, design)
            if report["status"] == "aborted":
                logger.error("Optimize | aborted after repeated failed evaluations, history kept in %s", out)
                return EXIT_CODES["solver"]
        else:
            cmd_export_geometry(config, out, design)
    except (
        ConfigError,
        NumericIntervalError,
        DomainError,
        GeometryError,
        SolverError,
        ContractError,
        GradientCheckError,
        FileNotFoundError,
        json.JSONDecodeError,
    ) as exc:
        code = _exit_code(exc)
        logger.error("%s | %s | exit: %d", type(exc).__name__, exc, code)
        return code

    logger.info("Isomotor Finished | Command: %s | Output: %s", args.command, out)
    return EXIT_CODES["ok"]
