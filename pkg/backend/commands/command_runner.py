"""
Shared plumbing of the subcommand handlers: run-directory lifecycle, manifest on success and on
failure, and the constants every command reports.
"""
from pathlib import Path
from typing import Callable, Optional

import utils.logger as logger
from backend.functionals import compute_constants
from backend.oracle_cacher import cached_gn_constant
from backend.run_manager import RunManager
from backend.solver_models import RotationConstants, RunConfig
from components.enums import RunStatus

CommandBody = Callable[[RunManager], dict]


def resolve_gn_constant(config: RunConfig) -> float:
    physics = config.physics
    row = cached_gn_constant(physics.dim, physics.p, config.oracle.radius, config.oracle.n_points)
    return float(row["gn_const"])


def resolve_constants(config: RunConfig) -> Optional[RotationConstants]:
    """Closed-form constants of the run; None without rotation, where they are undefined."""
    if not config.physics.omega_mag:
        logger.log("ℹ️ |Ω| = 0: rotation constants are not defined for this run", indent_level=1)
        return None
    constants = compute_constants(config.physics, config.r, resolve_gn_constant(config))
    logger.log(f"ℹ️ c₀ = {constants.c0:.6e} (c = {config.c:.6e}, "
               f"{'below' if config.c < constants.c0 else 'not below'} c₀)", indent_level=1)
    return constants


def run_command(command: str, config: Optional[RunConfig], output_dir: Path, body: CommandBody,
                constants: Optional[RotationConstants] = None) -> dict:
    """
    Executes one subcommand inside its run directory.

    The body receives the RunManager, writes its artifacts through it and returns the results
    summary. Whatever happens, manifest.json is written: with status "completed" and the results,
    or with status "failed" and the exception, which is then re-raised for the exit code.

    Args:
        command: Subcommand name recorded in the manifest.
        config: Parsed configuration, or None for commands run without a config file.
        output_dir: Run directory; it is checked for writability before the body starts.
        body: The computation.
        constants: Rotation constants when already known; the body may also set them on
            `run.constants` once it has computed them.

    Returns:
        dict: The manifest document.
    """
    logger.log(f"ℹ️ Running '{command}'", add_line_before=True)
    run = RunManager.initialize(output_dir, command)
    run.constants = constants
    try:
        results = body(run)
        return run.write_manifest(config, results, RunStatus.COMPLETED)
    except Exception as error:
        logger.log(f"❌ {type(error).__name__}: {error}", indent_level=1)
        run.write_manifest(config, None, RunStatus.FAILED, error=error)
        raise
    finally:
        run.close()
