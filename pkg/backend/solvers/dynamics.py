"""
Real-time propagation of i∂ₜψ = −½Δψ + ½|x|²ψ − (Ω·L)ψ − a|ψ|^{p−2}ψ by palindromic Strang
splitting, conservation monitoring, the orbital-stability experiment and the blow-up check.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

import components.constants as const
import utils.logger as logger
from backend.functionals import energy
from backend.solver_errors import ValidationError
from backend.solver_models import GroundStateReport, StabilitySummary, TrajectoryStats
from backend.spectral_core import GridSpec, PhysicsParams, WaveField, operators_for
from components.enums import BlowupReason, StreamPurpose
from components.factories.field_factory import create_sigma_perturbation
from utils.benchmark import Benchmark
from utils.utils import stream_generator

SnapshotCallback = Callable[[int, float, WaveField], None]


class StrangPropagator:
    """
    One palindromic step V/2 · K/2 · R · K/2 · V/2 for a fixed (grid, params, dt).

    V is the pointwise trap+nonlinear phase (exact, |ψ| is invariant under it), K the kinetic
    phase in transform space and R the rigid rotation by |Ω|dt, realized as three Fourier shears.
    Every substep is unitary and S(−dt) is the exact inverse of S(dt).
    """

    def __init__(self, grid: GridSpec, params: PhysicsParams, dt: float):
        if grid.dim != params.dim:
            raise ValidationError(f"⚠️ Grid dimension {grid.dim} differs from physics dimension {params.dim}.")
        if params.omega_mag * abs(dt) * grid.half_width > grid.spacing:
            raise ValidationError(f"⚠️ |Ω|·|dt|·L = {params.omega_mag * abs(dt) * grid.half_width:.3e} exceeds the "
                                  f"grid spacing h = {grid.spacing:.3e}; reduce dt.")
        self.grid = grid
        self.params = params
        self.dt = dt
        self.ops = operators_for(grid)
        self.kinetic_half = np.exp(-0.25j * dt * self.ops.k2)
        self.trap = 0.5 * self.ops.r2
        self._prepare_shears(params.omega_mag * dt)

    def _prepare_shears(self, angle: float) -> None:
        """Precomputes the shear multipliers of a rotation by `angle`; no-op when the frame does not rotate."""
        self.rotates = angle != 0.0
        if not self.rotates:
            return
        n, m = self.grid.dim, self.grid.points_per_axis
        k = self.ops.k_axis.copy()
        k[m // 2] = 0.0
        shape0, shape1 = [1] * n, [1] * n
        shape0[0], shape1[1] = m, m
        x1 = self.ops.axis.reshape(shape0)
        x2 = self.ops.axis.reshape(shape1)
        # u(x) ↦ u(x₁ + αx₂, x₂) and u(x) ↦ u(x₁, x₂ + βx₁)
        self.x_shear = np.exp(1j * k.reshape(shape0) * (-math.tan(0.5 * angle)) * x2)
        self.y_shear = np.exp(1j * k.reshape(shape1) * math.sin(angle) * x1)

    def potential_half(self, values: np.ndarray) -> np.ndarray:
        """exp(−i(dt/2)(|x|²/2 − a|u|^{p−2}))u, exact because |u| is constant along this flow."""
        potential = self.trap
        if self.params.a:
            potential = potential - self.params.a * np.abs(values) ** (self.params.p - 2.0)
        return np.exp(-0.5j * self.dt * potential) * values

    def kinetic_half_step(self, values: np.ndarray) -> np.ndarray:
        return self.ops.ifft(self.kinetic_half * self.ops.fft(values))

    def rotate(self, values: np.ndarray) -> np.ndarray:
        """u(x) ↦ u(R x) with R the counter-clockwise rotation by |Ω|dt in the (x₁, x₂) plane."""
        if not self.rotates:
            return values
        ops = self.ops
        values = ops.axis_ifft(ops.axis_fft(values, 0) * self.x_shear, 0)
        values = ops.axis_ifft(ops.axis_fft(values, 1) * self.y_shear, 1)
        return ops.axis_ifft(ops.axis_fft(values, 0) * self.x_shear, 0)

    def step(self, values: np.ndarray) -> np.ndarray:
        # palindromic order keeps the step second order and time reversible
        values = self.potential_half(values)
        values = self.kinetic_half_step(values)
        values = self.rotate(values)
        values = self.kinetic_half_step(values)
        return self.potential_half(values)


def strang_step(u: WaveField, dt: float, params: PhysicsParams) -> WaveField:
    """One second-order step of the rotating NLS; dt may be negative."""
    return WaveField(u.grid, StrangPropagator(u.grid, params, dt).step(np.array(u.values)))


def dist_sigma_mod_phase(u: WaveField, v: WaveField) -> float:
    """
    min over α of ‖e^{iα}v − u‖_Σ, attained at α = −arg⟨u, v⟩_Σ. The difference is formed
    explicitly so equal orbits come out at roundoff level instead of its square root.
    """
    if u.grid != v.grid:
        raise ValidationError("⚠️ Fields live on different grids.")
    ops = operators_for(u.grid)
    overlap = ops.sigma_inner(u.values, v.values)
    phase = abs(overlap) / overlap if overlap != 0 else 1.0
    difference = phase * v.values - u.values
    return math.sqrt(max(0.0, ops.sigma_inner(difference, difference).real))


def blowup_threshold(u0: WaveField) -> float:
    """min(10³‖∇u₀‖₂, ½·k_max·‖u₀‖₂): past either the gradient has exploded or left the grid."""
    ops = operators_for(u0.grid)
    gradient = math.sqrt(ops.grad_sq(u0.values))
    ceiling = const.GRID_GRADIENT_CEILING * u0.grid.nyquist * math.sqrt(ops.mass(u0.values))
    return min(const.BLOWUP_GRADIENT_FACTOR * gradient, ceiling)


def evolve(u0: WaveField, T: float, dt: float, params: PhysicsParams, reference: Optional[WaveField] = None,
           sample_every: float = const.DYNAMICS_DEFAULTS["sample_every"],
           snapshot_every: int = 0, on_snapshot: Optional[SnapshotCallback] = None) -> TrajectoryStats:
    """
    Propagates u0 over a horizon T > 0 (backwards when dt < 0), sampling mass, energy, ‖∇u‖₂,
    ⟨L_z⟩ and, with a reference field, the phase-gauged Σ-distance to it.

    The step count is ⌈T/|dt|⌉ and the step is shrunk to land exactly on T. The run halts early
    with blowup_flag set when ‖∇u‖₂ passes the blow-up threshold, when mass reaches the boundary
    shell or the top third of the spectrum, or when the field turns non-finite.

    Args:
        snapshot_every: Emit every k-th sample through on_snapshot (0 disables).

    Returns:
        TrajectoryStats: Sample series with times measured as elapsed |t|.
    """
    if not T > 0:
        raise ValidationError(f"⚠️ T must be positive, got {T}.")
    if dt == 0:
        raise ValidationError("⚠️ dt must be non-zero.")
    if reference is not None and reference.grid != u0.grid:
        raise ValidationError("⚠️ Reference field lives on a different grid.")

    n_steps = max(1, math.ceil(T / abs(dt) - 1e-9))
    step = math.copysign(T / n_steps, dt)
    stride = max(1, int(round(sample_every / abs(step))))
    propagator = StrangPropagator(u0.grid, params, step)
    ops = propagator.ops
    threshold = blowup_threshold(u0)

    series = {"t": [], "mass": [], "energy": [], "grad": [], "lz": [], "dist": []}
    samples = 0

    def record(values: np.ndarray, elapsed: float) -> None:
        field = WaveField(u0.grid, values)
        parts = energy(field, params)
        series["t"].append(elapsed)
        series["mass"].append(parts.mass)
        series["energy"].append(parts.total)
        series["grad"].append(math.sqrt(2.0 * parts.kinetic))
        series["lz"].append(ops.lz_expectation(values))
        if reference is not None:
            series["dist"].append(dist_sigma_mod_phase(field, reference))

    benchmark = Benchmark(f"Evolution over T = {T:.4g} ({n_steps} steps)")
    values = np.array(u0.values)
    record(values, 0.0)
    reason: Optional[BlowupReason] = None
    blowup_time: Optional[float] = None
    for index in range(1, n_steps + 1):
        candidate = propagator.step(values)
        last = index == n_steps
        if index % stride != 0 and not last:
            values = candidate
            continue
        elapsed = index * abs(step)
        if not np.all(np.isfinite(candidate)):
            reason, blowup_time = BlowupReason.NON_FINITE, elapsed
            break
        values = candidate
        record(values, elapsed)
        samples += 1
        if series["grad"][-1] > threshold:
            reason = BlowupReason.GRADIENT
        elif (ops.spectral_tail(values) > const.SPECTRAL_TAIL_LIMIT
              or ops.boundary_leak(values) > const.BOUNDARY_LEAK_LIMIT):
            reason = BlowupReason.TAIL_LEAK
        if reason is not None:
            blowup_time = elapsed
            break
        if snapshot_every and on_snapshot is not None and samples % snapshot_every == 0:
            on_snapshot(samples, elapsed, WaveField(u0.grid, values))

    if reason is not None:
        logger.log(f"⚠️ Blow-up indicator ({reason.value}) at t = {blowup_time:.4g}; the truncated box cannot "
                   f"represent a true singularity", indent_level=2)
    benchmark.print_time(level=2)
    return TrajectoryStats(
        times=np.array(series["t"]),
        mass_series=np.array(series["mass"]),
        energy_series=np.array(series["energy"]),
        grad_norm_series=np.array(series["grad"]),
        lz_series=np.array(series["lz"]),
        dist_series=np.array(series["dist"]) if reference is not None else None,
        blowup_flag=reason is not None,
        blowup_time=blowup_time,
        blowup_reason=reason,
        blowup_threshold=threshold,
        final_field=WaveField(u0.grid, values),
    )


def _run_trial(index: int, minimizer: WaveField, params: PhysicsParams, c: float, scale: float, T: float,
               dt: float, sample_every: float, seed: int) -> tuple[float, float, bool]:
    """
    Evolves one perturbed copy of the minimizer.

    Args:
        index: Trial number; selects the independent random stream for the perturbation.
        scale: Perturbation size relative to ‖u_c‖_Σ.

    Returns:
        tuple: (initial distance, largest sampled distance, blow-up flag), distances in Σ modulo phase.
    """
    rng = stream_generator(seed, StreamPurpose.TRIALS.value, index)
    ops = operators_for(minimizer.grid)
    size = scale * math.sqrt(ops.sigma_inner(minimizer.values, minimizer.values).real)
    bump = create_sigma_perturbation(minimizer.grid, rng, size)
    # back onto S(c) before the clock starts
    u0 = WaveField(minimizer.grid, minimizer.values + bump.values).normalized(c)
    initial = dist_sigma_mod_phase(u0, minimizer)
    stats = evolve(u0, T, dt, params, reference=minimizer, sample_every=sample_every)
    return initial, float(np.max(stats.dist_series)), stats.blowup_flag


def stability_experiment(params: PhysicsParams, minimizer: GroundStateReport, perturbation_scale: float,
                         n_trials: int, T: float, dt: float = const.DYNAMICS_DEFAULTS["dt"],
                         sample_every: float = const.DYNAMICS_DEFAULTS["sample_every"], seed: int = 0,
                         workers: int = 1) -> StabilitySummary:
    """
    Perturbs the minimizer by seeded smooth fields of Σ-norm perturbation_scale·‖u_c‖_Σ, evolves each
    renormalized start to T and reports the worst ratio of sup_t dist_Σ to the initial distance.
    A trial that blows up counts as instability evidence; the experiment still completes.
    """
    if not 0.0 < perturbation_scale <= 0.1:
        raise ValidationError(f"⚠️ perturbation_scale must lie in (0, 0.1], got {perturbation_scale}.")
    if n_trials < 1:
        raise ValidationError(f"⚠️ n_trials must be at least 1, got {n_trials}.")
    c = minimizer.energy.mass
    logger.log(f"🔄 Running {n_trials} perturbation trials (scale {perturbation_scale:.1e}, T = {T:.4g})",
               indent_level=1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        outcomes = list(executor.map(
            lambda index: _run_trial(index, minimizer.field, params, c, perturbation_scale, T, dt, sample_every,
                                     seed),
            range(n_trials)))

    initial = [outcome[0] for outcome in outcomes]
    maxima = [outcome[1] for outcome in outcomes]
    blowups = sum(outcome[2] for outcome in outcomes)
    ratios = [math.inf if blew else peak / start for start, peak, blew in outcomes]
    amplification = max(ratios)
    if blowups:
        logger.log(f"❌ {blowups} trial(s) blew up: evidence against stability", indent_level=1)
    else:
        logger.log(f"✅ Amplification factor {amplification:.4f}", indent_level=1)
    return StabilitySummary(amplification=amplification, trial_amplifications=ratios, initial_distances=initial,
                            max_distances=maxima, blowups=blowups, contradiction=blowups > 0,
                            perturbation_scale=perturbation_scale, horizon=T, minimizer_omega=minimizer.omega_c)
