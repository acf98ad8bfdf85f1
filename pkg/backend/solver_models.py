from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

import components.constants as const
from backend.solver_errors import ValidationError
from backend.spectral_core import GridSpec, PhysicsParams, WaveField
from components.enums import BallNorm, BlowupReason, InitKind, Region
from utils.utils import to_jsonable


@dataclass
class EnergyBreakdown:
    """Components of I(u) together with Q(u) and the multiplier estimate"""
    kinetic: float
    trap: float
    rotation: float
    nonlinear: float
    total: float
    sigma_dot: float
    pohozaev: float
    omega_est: float
    mass: float

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class RotationConstants:
    """Closed-form constants of the local-minimum geometry. Absent entries are None."""
    nu: float
    mu: float
    eps0: float
    c_star: float
    c_upper: float
    eps1: Optional[float]
    c1: Optional[float]
    c2: Optional[float]
    c_omega: Optional[float]
    c0: float
    gn_const: float
    r: float
    a: float
    frequency_ok: bool
    eps1_interval: Optional[tuple[float, float]]

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class SolverConfig:
    """Knobs of the constrained descent"""
    c: float
    r: float
    dt_imag: float = const.SOLVER_DEFAULTS["dt_imag"]
    tol_grad: float = const.SOLVER_DEFAULTS["tol_grad"]
    max_iters: int = const.SOLVER_DEFAULTS["max_iters"]
    init_kind: InitKind = InitKind.GAUSSIAN
    init_path: Optional[Path] = None
    seed: int = 0
    ball_norm: BallNorm = BallNorm.SIGMA_DOT
    workers: int = const.SOLVER_DEFAULTS["workers"]

    def __post_init__(self):
        self.init_kind = InitKind(self.init_kind)
        self.ball_norm = BallNorm(self.ball_norm)
        if not self.dt_imag > 0:
            raise ValidationError(f"⚠️ dt_imag must be positive, got {self.dt_imag}.")
        if not self.tol_grad > 0:
            raise ValidationError(f"⚠️ tol_grad must be positive, got {self.tol_grad}.")
        if int(self.max_iters) < 1:
            raise ValidationError(f"⚠️ max_iters must be at least 1, got {self.max_iters}.")
        if not self.c > 0:
            raise ValidationError(f"⚠️ c must be positive, got {self.c}.")
        if not self.r > 0:
            raise ValidationError(f"⚠️ r must be positive, got {self.r}.")
        if self.init_kind is InitKind.FROM_FILE and self.init_path is None:
            raise ValidationError("⚠️ init_kind = from_file needs init_path.")
        self.max_iters = int(self.max_iters)

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class GroundStateReport:
    """Result of one constrained minimization"""
    field: WaveField
    omega_c: float
    energy: EnergyBreakdown
    iters: int
    grad_residual: float
    l0: complex
    dist_sq_to_l0psi0: float
    region: Region
    feasible: bool
    converged: bool
    ball_value: float
    angular_momentum: float
    angular_spread: float
    gaussian_energy: float
    distance_bound: Optional[float] = None
    omega_window: Optional[tuple[float, float]] = None
    stage_iters: tuple[int, int] = (0, 0)
    energy_history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("field", "energy")}
        data["energy"] = self.energy.to_dict()
        data["grid"] = asdict(self.field.grid)
        return to_jsonable(data)


@dataclass
class GeometryProbeReport:
    """Both infima of the local-minimum geometry and the analytic bounds around them"""
    nu_ball_inf: float
    annulus_estimate: float
    annulus_lower_bound: float
    nu_ball_upper_bound: float
    gap: float
    minimizer_region: Region
    minimizer_sigma_dot: float
    annulus_sigma_dot: float
    nu_radius: float
    mu_radius: float
    gap_positive: bool

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class TrajectoryStats:
    """Sampled conservation and stability series of one real-time run"""
    times: np.ndarray
    mass_series: np.ndarray
    energy_series: np.ndarray
    grad_norm_series: np.ndarray
    lz_series: np.ndarray
    dist_series: Optional[np.ndarray]
    blowup_flag: bool
    blowup_time: Optional[float]
    blowup_reason: Optional[BlowupReason]
    blowup_threshold: float
    final_field: WaveField

    def to_frame(self) -> pd.DataFrame:
        dist = self.dist_series if self.dist_series is not None else np.full(len(self.times), np.nan)
        return pd.DataFrame({
            "t": self.times,
            "mass": self.mass_series,
            "energy": self.energy_series,
            "grad_norm": self.grad_norm_series,
            "dist": dist,
        }, columns=const.TRAJECTORY_COLUMNS)

    def relative_drift(self, series: np.ndarray) -> float:
        reference = abs(series[0]) if series[0] != 0 else 1.0
        return float(np.max(np.abs(series - series[0])) / reference)

    def summary(self) -> dict:
        return to_jsonable({
            "samples": len(self.times),
            "final_time": self.times[-1],
            "mass_drift": self.relative_drift(self.mass_series),
            "energy_drift": self.relative_drift(self.energy_series),
            "lz_drift": float(np.max(np.abs(self.lz_series - self.lz_series[0]))
                              / max(abs(self.lz_series[0]), self.mass_series[0])),
            "max_dist": None if self.dist_series is None else float(np.max(self.dist_series)),
            "blowup_flag": self.blowup_flag,
            "blowup_time": self.blowup_time,
            "blowup_reason": self.blowup_reason,
            "blowup_threshold": self.blowup_threshold,
        })


@dataclass
class StabilitySummary:
    """Outcome of a perturbation experiment around a minimizer"""
    amplification: float
    trial_amplifications: list[float]
    initial_distances: list[float]
    max_distances: list[float]
    blowups: int
    contradiction: bool
    perturbation_scale: float
    horizon: float
    minimizer_omega: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "trial": np.arange(len(self.trial_amplifications)),
            "initial_dist": self.initial_distances,
            "max_dist": self.max_distances,
            "amplification": self.trial_amplifications,
        })

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class SaddleOptions:
    """Knobs of the path relaxation and the saddle refinement"""
    n_nodes: int = const.SADDLE_DEFAULTS["n_nodes"]
    max_sweeps: int = const.SADDLE_DEFAULTS["max_sweeps"]
    anneal_every: int = const.SADDLE_DEFAULTS["anneal_every"]
    anneal_factor: float = const.SADDLE_DEFAULTS["anneal_factor"]
    spring: float = const.SADDLE_DEFAULTS["spring"]
    step: float = const.SADDLE_DEFAULTS["step"]
    tol_residual: float = const.SADDLE_DEFAULTS["tol_residual"]
    max_newton: int = const.SADDLE_DEFAULTS["max_newton"]
    workers: int = 1

    def __post_init__(self):
        if self.n_nodes < const.MIN_PATH_NODES:
            raise ValidationError(f"⚠️ n_nodes must be at least {const.MIN_PATH_NODES}, got {self.n_nodes}.")
        if not 0.0 < self.anneal_factor < 1.0:
            raise ValidationError(f"⚠️ anneal_factor must lie in (0,1), got {self.anneal_factor}.")
        if not self.step > 0:
            raise ValidationError(f"⚠️ step must be positive, got {self.step}.")
        if not self.tol_residual > 0:
            raise ValidationError(f"⚠️ tol_residual must be positive, got {self.tol_residual}.")
        if self.spring < 0:
            raise ValidationError(f"⚠️ spring must be non-negative, got {self.spring}.")
        for name in ("max_sweeps", "anneal_every", "max_newton"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"⚠️ {name} must be at least 1, got {getattr(self, name)}.")

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


@dataclass
class MountainPath:
    """
    Discrete path on S(c) from the local minimizer (node 0) to the negative-energy endpoint (last node).
    `params` is the scaling parameter t of each node; relaxed paths keep the parameters they started from.
    """
    params: np.ndarray
    nodes: list[WaveField]
    energies: np.ndarray
    endpoint_scale: float

    @property
    def max_index(self) -> int:
        return int(np.argmax(self.energies))

    @property
    def max_energy(self) -> float:
        return float(np.max(self.energies))

    def to_array(self) -> np.ndarray:
        return np.column_stack([self.params, self.energies])


@dataclass
class MountainPassReport:
    """Upper estimate of the mountain-pass level and the refined saddle candidate"""
    gamma_c: float
    path_nodes: np.ndarray
    saddle_field: WaveField
    saddle_energy: float
    saddle_Q: float
    saddle_grad_residual: float
    omega_hat: float
    m_c_r: float
    accepted: bool
    margin: float
    saddle_sigma_dot: float
    endpoint_scale: float
    newton_iters: int
    dilation_slope: float = float("nan")
    omega_history: list[float] = field(default_factory=list)
    q_history: list[float] = field(default_factory=list)
    bound_slack: list[float] = field(default_factory=list)

    def path_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.path_nodes, columns=const.PATH_COLUMNS)

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("saddle_field", "path_nodes")}
        data["gamma_label"] = "upper estimate"
        data["saddle_label"] = "candidate"
        data["path_nodes"] = len(self.path_nodes)
        return to_jsonable(data)


@dataclass
class RadialProfile:
    """Positive radial ground state W_p on a uniform grid of [0, R]"""
    radii: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    dim: int
    p: float
    l2_sq: float
    decay_ok: bool
    shoot_value: float
    match_radius: float
    residual_max: float
    pohozaev_defect: float
    nehari_defect: float

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("radii", "values", "derivative")}
        data["radius"] = float(self.radii[-1])
        data["n_points"] = len(self.radii)
        return to_jsonable(data)


@dataclass
class DynamicsConfig:
    T: float = const.DYNAMICS_DEFAULTS["T"]
    dt: float = const.DYNAMICS_DEFAULTS["dt"]
    sample_every: float = const.DYNAMICS_DEFAULTS["sample_every"]
    snapshot_every: int = const.DYNAMICS_DEFAULTS["snapshot_every"]
    perturbation_scale: float = const.STABILITY_DEFAULTS["perturbation_scale"]
    n_trials: int = const.STABILITY_DEFAULTS["n_trials"]

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError(f"⚠️ T must be positive, got {self.T}.")
        if self.dt == 0:
            raise ValidationError("⚠️ dt must be non-zero.")
        if not self.sample_every > 0:
            raise ValidationError(f"⚠️ sample_every must be positive, got {self.sample_every}.")
        if not 0.0 < self.perturbation_scale <= 0.1:
            raise ValidationError(f"⚠️ perturbation_scale must lie in (0, 0.1], got {self.perturbation_scale}.")
        if self.n_trials < 1 or self.snapshot_every < 0:
            raise ValidationError("⚠️ n_trials must be ≥ 1 and snapshot_every ≥ 0.")


@dataclass
class OracleConfig:
    radius: float = const.ORACLE_DEFAULTS["radius"]
    n_points: int = const.ORACLE_DEFAULTS["n_points"]

    def __post_init__(self):
        if self.radius and self.radius < const.ORACLE_MIN_RADIUS:
            raise ValidationError(f"⚠️ radius must be 0 (automatic) or at least {const.ORACLE_MIN_RADIUS}, "
                                  f"got {self.radius}.")
        if self.n_points < const.ORACLE_MIN_POINTS:
            raise ValidationError(f"⚠️ n_points must be at least {const.ORACLE_MIN_POINTS}, got {self.n_points}.")


@dataclass
class RunConfig:
    """Fully validated run configuration; `echo` holds every key with defaults applied."""
    grid: GridSpec
    physics: PhysicsParams
    solver: SolverConfig
    dynamics: DynamicsConfig
    saddle: SaddleOptions
    oracle: OracleConfig
    seed: int
    output_dir: Path
    echo: dict = field(default_factory=dict)

    @property
    def c(self) -> float:
        return self.solver.c

    @property
    def r(self) -> float:
        return self.solver.r
