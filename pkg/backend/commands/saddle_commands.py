import utils.logger as logger
from backend.commands.command_runner import resolve_constants, run_command
from backend.run_manager import RunManager
from backend.solver_models import RunConfig
from backend.solvers.groundstate import minimize_local
from backend.solvers.saddle import baseline_path, endpoint_v_c, estimate_gamma, refine_saddle

MOUNTAIN_PASS_FILE = "mountain_pass.json"
SADDLE_SNAPSHOT_FILE = "saddle.rgpe1"
PATH_FILE = "path.csv"


def mountain_pass_command(config: RunConfig) -> dict:
    """
    Minimizer, dilation endpoint, relaxed path and refined saddle candidate.
    Writes the report JSON, the saddle snapshot and the path energy profile (t, I).
    """
    def body(run: RunManager) -> dict:
        params = config.physics
        run.constants = resolve_constants(config)
        minimizer = minimize_local(params, config.solver, config.grid, run.constants)
        if not minimizer.converged:
            logger.log("⚠️ Minimizer did not converge; m_c^r is taken at the last iterate", indent_level=1)

        logger.log("🔄 Mountain-pass path", indent_level=1)
        v_c, scale = endpoint_v_c(minimizer.field, params, config.r)
        baseline = baseline_path(minimizer.field, scale, config.saddle.n_nodes, params)
        gamma_c, relaxed = estimate_gamma(minimizer.field, v_c, params, config.saddle, initial=baseline)

        logger.log("🔄 Saddle refinement", indent_level=1)
        report = refine_saddle(relaxed, params, config.saddle, run.constants)
        run.save_json(MOUNTAIN_PASS_FILE, report.to_dict())
        run.save_snapshot(SADDLE_SNAPSHOT_FILE, report.saddle_field, params, config.c)
        run.save_csv(PATH_FILE, report.path_frame())

        results = report.to_dict()
        results["baseline_max"] = baseline.max_energy
        results["minimizer_energy"] = minimizer.energy.total
        results["minimizer_converged"] = minimizer.converged
        return results

    return run_command("mountain-pass", config, config.output_dir, body)
