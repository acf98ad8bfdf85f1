from typing import Sequence

import components.constants as const
import utils.logger as logger
from backend.commands.command_runner import resolve_constants, run_command
from backend.run_manager import RunManager
from backend.solver_errors import NumericalError, ValidationError
from backend.solver_models import RunConfig
from backend.solvers.groundstate import asymptotics_sweep, distance_scaling_fit, geometry_probe, minimize_local

SOLVE_REPORT_FILE = "ground_state.json"
SOLVE_SNAPSHOT_FILE = "ground_state.rgpe1"
SWEEP_FILE = "sweep.csv"
GEOMETRY_FILE = "geometry_probe.json"


def parse_c_list(text: str) -> list[float]:
    """'a,b,c' -> [a, b, c]; the sweep itself checks the ordering."""
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ValidationError(f"⚠️ --c-list expects comma-separated numbers, got '{text}'.") from None
    if not values:
        raise ValidationError("⚠️ --c-list is empty.")
    return values


def solve_command(config: RunConfig) -> dict:
    """Local minimizer on S(c)∩B(r): report JSON and RGPE1 snapshot."""
    def body(run: RunManager) -> dict:
        run.constants = resolve_constants(config)
        report = minimize_local(config.physics, config.solver, config.grid, run.constants)
        run.save_json(SOLVE_REPORT_FILE, report.to_dict())
        run.save_snapshot(SOLVE_SNAPSHOT_FILE, report.field, config.physics, config.c)
        return {
            "energy": report.energy.total,
            "omega_c": report.omega_c,
            "iters": report.iters,
            "grad_residual": report.grad_residual,
            "converged": report.converged,
            "region": report.region,
            "dist_sq_to_l0psi0": report.dist_sq_to_l0psi0,
            "pohozaev_ratio": abs(report.energy.pohozaev) / report.energy.sigma_dot,
        }

    return run_command("solve", config, config.output_dir, body)


def sweep_command(config: RunConfig, c_list: Sequence[float]) -> dict:
    """Asymptotics table over decreasing masses plus the distance-scaling fit."""
    def body(run: RunManager) -> dict:
        run.constants = resolve_constants(config)
        table = asymptotics_sweep(config.physics, config.r, c_list, config.grid, config.solver, run.constants,
                                  workers=config.solver.workers)
        run.save_csv(SWEEP_FILE, table[const.SWEEP_COLUMNS])
        fit = distance_scaling_fit(table, config.physics)
        failed = table[table["error"] != ""]
        if len(failed):
            logger.log(f"⚠️ {len(failed)} row(s) failed; see the manifest", indent_level=1)
        return {
            "rows": len(table),
            "converged_rows": int(table["converged"].astype(bool).sum()),
            "failed_rows": {f"{row.c:.6e}": row.error for row in failed.itertuples()},
            "distance_scaling": fit,
        }

    return run_command("sweep", config, config.output_dir, body)


def geometry_probe_command(config: RunConfig) -> dict:
    """
    ν-ball and annulus infima with the gap between them.

    Raises:
        NumericalError: if the gap is not positive, after geometry_probe.json is written.
    """
    def body(run: RunManager) -> dict:
        run.constants = resolve_constants(config)
        if run.constants is None:
            raise ValidationError("⚠️ geometry-probe needs 0 < |Ω| < 1: ν and μ are undefined without rotation.")
        report = geometry_probe(config.physics, config.r, config.c, run.constants, config.grid, config.solver)
        run.save_json(GEOMETRY_FILE, report.to_dict())
        if not report.gap_positive:
            # the report stays on disk for inspection; the run still fails
            raise NumericalError(f"⚠️ Annulus infimum does not exceed the ν-ball infimum (gap {report.gap:.6e}).")
        return report.to_dict()

    return run_command("geometry-probe", config, config.output_dir, body)
