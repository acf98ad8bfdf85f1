from pathlib import Path
from typing import Optional

import components.constants as const
import utils.logger as logger
from backend.commands.command_runner import run_command
from backend.oracle_cacher import OracleCacher, cached_gn_constant, profile_row
from backend.property_checks import run_property_suites
from backend.run_manager import RunManager
from backend.solver_errors import NumericalError
from backend.solver_models import OracleConfig, RunConfig
from backend.solvers.oracle import default_radius, gn_constant, solve_Wp

GN_CONSTANT_FILE = "gn_constant.json"
CHECK_SUMMARY_FILE = "check_summary.csv"
GN_OUTPUT_KEYS = ["N", "p", "delta_p", "W_l2_sq", "gn_const"]


def gn_constant_command(dim: int, p: float, output_dir: Path, radius: float = 0.0,
                        n_points: int = const.ORACLE_MIN_POINTS, cacher: Optional[OracleCacher] = None) -> dict:
    """C₍N,p₎ from the radial ground state, served from the parquet cache when present."""
    oracle = OracleConfig(radius=radius, n_points=n_points)

    def body(run: RunManager) -> dict:
        row = cached_gn_constant(dim, p, oracle.radius, oracle.n_points, cacher)
        run.save_json(GN_CONSTANT_FILE, {key: row[key] for key in GN_OUTPUT_KEYS})
        logger.log(f"✅ C₍{dim},{p:g}₎ = {row['gn_const']:.12f}, ‖W‖₂² = {row['W_l2_sq']:.12f}", indent_level=1)
        return row

    return run_command("gn-constant", None, output_dir, body)


def check_command(config: RunConfig, n_fields: int = const.CHECK_DEFAULT_FIELDS,
                  cacher: Optional[OracleCacher] = None) -> dict:
    """
    Runs every property suite on seeded random fields of the config grid.

    Raises:
        NumericalError: if any suite fails, after check_summary.csv and the table are written.
    """
    def body(run: RunManager) -> dict:
        physics = config.physics
        profile = solve_Wp(physics.dim, physics.p, config.oracle.radius or default_radius(physics.dim, physics.p),
                           config.oracle.n_points)
        (cacher or OracleCacher()).store(profile_row(profile))
        table = run_property_suites(config.grid, physics, gn_constant(profile), n_fields, config.seed,
                                    config.solver.workers, profile)
        run.save_csv(CHECK_SUMMARY_FILE, table)
        logger.log("\n" + table.to_string(index=False), indent_level=0)
        failed = table.loc[~table["passed"], "suite"].tolist()
        if failed:
            raise NumericalError(f"⚠️ Property suites failed: {', '.join(failed)}.")
        return {"suites": len(table), "passed": True, "fields_per_suite": n_fields}

    return run_command("check", config, config.output_dir, body)
