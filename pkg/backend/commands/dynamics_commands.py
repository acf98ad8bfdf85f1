from pathlib import Path
from typing import Optional

import utils.logger as logger
from backend.commands.command_runner import resolve_constants, run_command
from backend.data_handler import read_snapshot
from backend.run_manager import RunManager
from backend.solver_models import DynamicsConfig, RunConfig
from backend.solvers.dynamics import evolve, stability_experiment
from backend.solvers.groundstate import minimize_local
from backend.spectral_core import WaveField

TRAJECTORY_FILE = "trajectory.csv"
FINAL_SNAPSHOT_FILE = "final.rgpe1"
STABILITY_FILE = "stability.json"
STABILITY_TRIALS_FILE = "stability_trials.csv"


def snapshot_name(index: int) -> str:
    return f"snapshot_{index:05d}.rgpe1"


def evolve_command(init_path: Path, output_dir: Path, T: Optional[float] = None, dt: Optional[float] = None,
                   config: Optional[RunConfig] = None, snapshot_every: Optional[int] = None) -> dict:
    """
    Real-time evolution of an RGPE1 snapshot with the physics stored in it.

    The distance column is measured against the initial field, so a standing wave keeps it at
    zero up to its phase. T, dt and snapshot_every override the [dynamics] section when given.
    """
    base = config.dynamics if config is not None else DynamicsConfig()
    dynamics = DynamicsConfig(T=T if T is not None else base.T, dt=dt if dt is not None else base.dt,
                              sample_every=base.sample_every,
                              snapshot_every=snapshot_every if snapshot_every is not None else base.snapshot_every,
                              perturbation_scale=base.perturbation_scale, n_trials=base.n_trials)

    def body(run: RunManager) -> dict:
        snapshot = read_snapshot(init_path)
        params = snapshot.params
        logger.log(f"ℹ️ Loaded {init_path} (N={params.dim}, p={params.p:g}, |Ω|={params.omega_mag:g}, "
                   f"c={snapshot.c:.6g})", indent_level=1)

        def on_snapshot(index: int, elapsed: float, field: WaveField) -> None:
            run.save_snapshot(snapshot_name(index), field, params, snapshot.c)

        stats = evolve(snapshot.field, dynamics.T, dynamics.dt, params, reference=snapshot.field,
                       sample_every=dynamics.sample_every, snapshot_every=dynamics.snapshot_every,
                       on_snapshot=on_snapshot)
        run.save_csv(TRAJECTORY_FILE, stats.to_frame())
        run.save_snapshot(FINAL_SNAPSHOT_FILE, stats.final_field, params, snapshot.c)
        summary = stats.summary()
        summary["horizon"] = dynamics.T
        summary["dt"] = dynamics.dt
        return summary

    return run_command("evolve", config, output_dir, body)


def stability_command(config: RunConfig, n_trials: Optional[int] = None, scale: Optional[float] = None,
                      T: Optional[float] = None) -> dict:
    """Minimizer of the config, then the seeded perturbation experiment around it."""
    base = config.dynamics
    n_trials = n_trials if n_trials is not None else base.n_trials
    scale = scale if scale is not None else base.perturbation_scale
    horizon = T if T is not None else base.T

    def body(run: RunManager) -> dict:
        run.constants = resolve_constants(config)
        minimizer = minimize_local(config.physics, config.solver, config.grid, run.constants)
        if not minimizer.converged:
            logger.log("⚠️ Minimizer did not converge; trials start from the last iterate", indent_level=1)
        summary = stability_experiment(config.physics, minimizer, scale, n_trials, horizon, base.dt,
                                       base.sample_every, config.seed, config.solver.workers)
        run.save_json(STABILITY_FILE, summary.to_dict())
        run.save_csv(STABILITY_TRIALS_FILE, summary.to_frame())
        results = summary.to_dict()
        results["minimizer_converged"] = minimizer.converged
        return results

    return run_command("stability", config, config.output_dir, body)
