# Add constants here...
from pathlib import Path

APP_NAME = "rotor-gpe"
APP_VERSION = "1.0.0"

# Paths
PROJECT_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_OUTPUT_DIRECTORY = PROJECT_ROOT / "runs"
CACHE_DIRECTORY = PROJECT_ROOT / "cache"
GN_CACHE_FILE = "gn_constants.parquet"

# Grid
MIN_POINTS_PER_AXIS = 16
MAX_FIELD_BYTES = 8 * 1024 ** 3
GRID_DEFAULTS = {
    2: {"points_per_axis": 128, "half_width": 8.0},
    3: {"points_per_axis": 64, "half_width": 6.0},
}
HERMITE_MIN_HALF_WIDTH = 6.0

# Physics
MAX_EXPONENT_2D = 10.0
EXPONENT_TOLERANCE = 1e-12

# Monitors
TAIL_LEAK_TOLERANCE = 1e-8
BOUNDARY_SHELL_FRACTION = 0.1
DEALIAS_FRACTION = 2.0 / 3.0
GAUGE_THRESHOLD = 1e-12

# Ground state solver
SOLVER_DEFAULTS = {
    "dt_imag": 1e-2,
    "tol_grad": 1e-8,
    "max_iters": 200_000,
    "init_kind": "gaussian",
    "init_path": "",
    "workers": 1,
}
SPLIT_HANDOVER_RESIDUAL = 1e-3
SPLIT_MAX_ITERS = 2_000
RESIDUAL_CHECK_EVERY = 10
DESCENT_INITIAL_STEP = 1.0
DESCENT_MAX_STEP = 1.5
DESCENT_STEP_GROWTH = 1.25
RESIDUAL_PROXY_FACTOR = 10.0
DESCENT_MIN_STEP = 1e-10
MONOTONE_TOLERANCE = 1e-12
PRECONDITIONER_SHIFT = 1.0
CG_RTOL = 1e-12
CG_MAX_ITERS = 500
PERTURBATION_AMPLITUDE = 0.05
VORTEX_SEED_WEIGHT = 0.3

# Local-minimum geometry
ANNULUS_PENALTY = 100.0
ANNULUS_MAX_ITERS = 4_000
ANNULUS_TOL = 1e-6
ANNULUS_MARGIN = 1e-4
ANNULUS_DILATION_ROUNDS = 4

# Dynamics
DYNAMICS_DEFAULTS = {
    "T": 10 * 2 * 3.141592653589793,
    "dt": 1e-3,
    "sample_every": 0.1,
    "snapshot_every": 0,
}
BLOWUP_GRADIENT_FACTOR = 1e3
GRID_GRADIENT_CEILING = 0.5
SPECTRAL_TAIL_LIMIT = 1e-4
BOUNDARY_LEAK_LIMIT = 1e-6
STABILITY_DEFAULTS = {
    "perturbation_scale": 1e-2,
    "n_trials": 8,
}

# Saddle
SADDLE_DEFAULTS = {
    "n_nodes": 33,
    "max_sweeps": 600,
    "anneal_every": 200,
    "anneal_factor": 0.5,
    "spring": 1.0,
    "step": 0.2,
    "tol_residual": 1e-7,
    "max_newton": 60,
}
MIN_PATH_NODES = 17
ENDPOINT_MAX_DOUBLINGS = 8
PATH_TEAR_FACTOR = 6.0
SADDLE_Q_TOLERANCE = 1e-4
SADDLE_RESIDUAL_TOLERANCE = 1e-5
COLLAPSE_TOLERANCE = 1e-6
GMRES_RTOL = 1e-3
GMRES_RESTART = 40
GMRES_MAX_CYCLES = 3
SOFTMAX_INITIAL_TEMPERATURE = 0.25
NEWTON_MIN_DAMPING = 1.0 / 64.0
BOUND_SLACK_TOLERANCE = 1e-3

# Oracle
ORACLE_DEFAULTS = {
    "radius": 0.0,  # 0 selects the decay-aware default
    "n_points": 4096,
}
ORACLE_MIN_RADIUS = 15.0
ORACLE_MIN_POINTS = 4096
SHOOT_BRACKET = (1e-3, 1e3)
SHOOT_ORIGIN = 1e-6
SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-14
SHOOT_MAX_BISECTIONS = 200
BRACKET_SCAN_POINTS = 64
BRACKET_REFINEMENTS = 3
TAIL_MATCH_LEVEL = 1e-4
DECAY_LEVEL = 1e-10
ODE_RESIDUAL_TOLERANCE = 1e-8

# Property suites
CHECK_DEFAULT_FIELDS = 1000
IDENTITY_TOLERANCE = 1e-10
EXTREMIZER_TOLERANCE = 1e-3
CHECK_SLACK = 1e-8

# Output
CSV_FLOAT_FORMAT = "%.16e"
SWEEP_COLUMNS = ["c", "m_over_c", "omega_c", "ratio_grad", "ratio_trap", "dist_sq", "region", "converged"]
TRAJECTORY_COLUMNS = ["t", "mass", "energy", "grad_norm", "dist"]
PATH_COLUMNS = ["t", "I"]

# Exit codes
EXIT_SUCCESS = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
