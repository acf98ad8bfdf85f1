import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import components.constants as const
from backend.commands.dynamics_commands import evolve_command, stability_command
from backend.commands.ground_state_commands import (geometry_probe_command, parse_c_list, solve_command,
                                                    sweep_command)
from backend.commands.oracle_commands import check_command, gn_constant_command
from backend.commands.saddle_commands import mountain_pass_command
from backend.config_parser import load_config
from backend.solver_errors import NumericalError, ValidationError
from utils import logger
from utils.benchmark import Benchmark


def build_parser() -> argparse.ArgumentParser:
    """
    Creates the command-line parser with one subcommand per pipeline.

    Every subcommand except `gn-constant` and `evolve` reads a key=value config file; those two take
    their inputs from flags (`evolve` reads its physics from the snapshot and may still take a
    config for its [dynamics] and [run] sections).

    Returns:
        argparse.ArgumentParser
            The configured parser.
    """
    parser = argparse.ArgumentParser(prog=const.APP_NAME,
                                     description="Normalized standing waves of the rotating, trapped NLS.")
    parser.add_argument("--version", action="version", version=f"{const.APP_NAME} {const.APP_VERSION}")
    parser.add_argument("--quiet", action="store_true", help="only write run.log and the artifacts")
    parser.add_argument("--verbose", action="store_true", help="also show debug lines")
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(name: str, help_text: str, required: bool = True) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, required=required, help="key=value configuration file")
        sub.add_argument("--output-dir", type=Path, default=None, help="overrides [run] output_dir")
        return sub

    with_config("solve", "local minimizer on S(c)∩B(r)")

    sweep = with_config("sweep", "c → 0 asymptotics table")
    sweep.add_argument("--c-list", required=True, help="strictly decreasing masses, comma separated")

    evolve = with_config("evolve", "real-time evolution of a snapshot", required=False)
    evolve.add_argument("--init", type=Path, required=True, help="RGPE1 snapshot to evolve")
    evolve.add_argument("--T", type=float, default=None, help="horizon (positive)")
    evolve.add_argument("--dt", type=float, default=None, help="time step (negative runs backwards)")
    evolve.add_argument("--snapshot-every", type=int, default=None, help="emit a snapshot every k samples")

    stability = with_config("stability", "perturbation experiment around the minimizer")
    stability.add_argument("--trials", type=int, default=None)
    stability.add_argument("--scale", type=float, default=None)
    stability.add_argument("--T", type=float, default=None)

    with_config("mountain-pass", "mountain-pass level estimate and saddle refinement")
    with_config("geometry-probe", "ν-ball and annulus infima")

    check = with_config("check", "property suites on seeded random fields")
    check.add_argument("--fields", type=int, default=const.CHECK_DEFAULT_FIELDS)

    gn = commands.add_parser("gn-constant", help="sharp Gagliardo–Nirenberg constant")
    gn.add_argument("--N", type=int, required=True)
    gn.add_argument("--p", type=float, required=True)
    gn.add_argument("--R", type=float, default=const.ORACLE_DEFAULTS["radius"], help="0 picks the default")
    gn.add_argument("--n-points", type=int, default=const.ORACLE_DEFAULTS["n_points"])
    gn.add_argument("--output-dir", type=Path, default=const.DEFAULT_OUTPUT_DIRECTORY)
    return parser


def dispatch(args: argparse.Namespace) -> dict:
    if args.command == "gn-constant":
        return gn_constant_command(args.N, args.p, args.output_dir, args.R, args.n_points)

    config = load_config(args.config) if args.config is not None else None
    if config is not None and args.output_dir is not None:
        config.output_dir = args.output_dir
        config.echo["run"]["output_dir"] = args.output_dir

    if args.command == "evolve":
        output_dir = args.output_dir or (config.output_dir if config else const.DEFAULT_OUTPUT_DIRECTORY)
        return evolve_command(args.init, output_dir, args.T, args.dt, config, args.snapshot_every)
    if args.command == "solve":
        return solve_command(config)
    if args.command == "sweep":
        return sweep_command(config, parse_c_list(args.c_list))
    if args.command == "stability":
        return stability_command(config, args.trials, args.scale, args.T)
    if args.command == "mountain-pass":
        return mountain_pass_command(config)
    if args.command == "geometry-probe":
        return geometry_probe_command(config)
    if args.command == "check":
        return check_command(config, args.fields)
    raise ValidationError(f"⚠️ Unknown command '{args.command}'.")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one subcommand; returns 0 on success, 2 on invalid input and 3 on numerical failure."""
    args = build_parser().parse_args(argv)
    if args.quiet:
        logger.set_verbosity(logger.QUIET)
    elif args.verbose:
        logger.set_verbosity(logger.VERBOSE)

    benchmark = Benchmark(f"{const.APP_NAME} {args.command}")
    try:
        dispatch(args)
    except ValidationError as error:
        print(f"{const.APP_NAME}: {error}", file=sys.stderr)
        return const.EXIT_VALIDATION
    except NumericalError as error:
        print(f"{const.APP_NAME}: {error}", file=sys.stderr)
        return const.EXIT_NUMERICAL
    finally:
        benchmark.print_time(add_empty_line=True, level=0)
    return const.EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
