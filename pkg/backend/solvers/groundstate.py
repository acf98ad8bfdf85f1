"""
Local minimizers of the energy on S(c)∩B(r), their multipliers, the c → 0 asymptotics and the
geometry that separates the ν-ball from the outer annulus.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

import components.constants as const
import utils.logger as logger
from backend.functionals import (annulus_lower_bound, ball_feasible, ball_measure, dilate, distance_bound, energy,
                                 energy_value, hamiltonian_values, nu_ball_upper_bound, omega_window)
from backend.solver_errors import EscapedBallError, NumericalError, ValidationError
from backend.solver_models import (EnergyBreakdown, GeometryProbeReport, GroundStateReport, RotationConstants,
                                   SolverConfig)
from backend.solvers.descent import imaginary_time_descent, preconditioned_descent
from backend.spectral_core import (GridSpec, PhysicsParams, WaveField, make_grid, operators_for, project_l0,
                                   set_fft_workers, sigma_sq_norm)
from components.enums import BallNorm, Region
from components.factories.field_factory import create_gaussian, create_initial_field, gaussian_scale_for
from utils.benchmark import Benchmark


def default_grid(dim: int) -> GridSpec:
    """Desk-scale grid for the dimension: M = 128, L = 8 in 2D and M = 64, L = 6 in 3D."""
    defaults = const.GRID_DEFAULTS[dim]
    return make_grid(dim, defaults["points_per_axis"], defaults["half_width"])


def classify_region(value: float, r: float, omega_mag: float) -> Region:
    """Places a ball value against νr and μr with ν = (1−|Ω|)/4 and μ = (1+|Ω|)/2."""
    nu, mu = (1.0 - omega_mag) / 4.0, (1.0 + omega_mag) / 2.0
    if value <= nu * r:
        return Region.INSIDE_NU_BALL
    if value < mu * r:
        return Region.ANNULUS
    return Region.BOUNDARY


def _ball_monitor(grid: GridSpec, params: PhysicsParams, ball_norm: BallNorm, radius: float):
    """Raises once an iterate leaves B(radius) while the energy keeps dropping outward."""
    state = {"value": None, "energy": None}

    def monitor(values: np.ndarray, value: float) -> None:
        ball = ball_measure(WaveField(grid, values), params, ball_norm)
        previous_ball, previous_energy = state["value"], state["energy"]
        state["value"], state["energy"] = ball, value
        if ball > radius and previous_ball is not None and ball > previous_ball and value < previous_energy:
            raise EscapedBallError(f"⚠️ Iterate left B({radius:.6g}) (ball value {ball:.6g}) with the energy still "
                                   f"decreasing: the mass is not below c₀ for this radius.")

    return monitor


def _gauge(u: WaveField, c: float) -> WaveField:
    """Rotates the global phase so that l₀ is real and non-negative."""
    l0 = project_l0(u)
    if abs(l0) > const.GAUGE_THRESHOLD * math.sqrt(c):
        return u.scaled(abs(l0) / l0)
    return u


def _dist_sq(u: WaveField, l0: complex) -> float:
    """‖u − l₀ψ₀‖_Σ² against the oscillator ground state ψ₀."""
    ops = operators_for(u.grid)
    psi0 = np.pi ** (-u.grid.dim / 4.0) * np.exp(-0.5 * ops.r2)
    return sigma_sq_norm(WaveField(u.grid, u.values - l0 * psi0))


def minimize_local(params: PhysicsParams, config: SolverConfig, grid: Optional[GridSpec] = None,
                   constants: Optional[RotationConstants] = None, init: Optional[WaveField] = None,
                   ball_radius: Optional[float] = None) -> GroundStateReport:
    """
    Computes a local minimizer of I on S(c)∩B(r) by normalized descent.

    Args:
        params: Physics of the problem.
        config: Mass, radius and descent knobs.
        grid: Discretization; the per-dimension default when omitted.
        constants: Closed-form constants, used for the c < c₀ warning and the report's windows.
        init: Explicit initial iterate, overriding config.init_kind.
        ball_radius: Radius watched by the escape monitor (defaults to r).

    Returns:
        GroundStateReport: Non-converged runs come back flagged, not raised.

    Raises:
        ValidationError: if S(c)∩B(r) is empty.
        EscapedBallError: if the iterate leaves the ball while the energy still decreases.
    """
    grid = grid or default_grid(params.dim)
    if grid.dim != params.dim:
        raise ValidationError(f"⚠️ Grid dimension {grid.dim} differs from physics dimension {params.dim}.")
    c, r = config.c, config.r
    if not ball_feasible(params, c, r, config.ball_norm):
        raise ValidationError(f"⚠️ c = {c} > r/N = {r / params.dim:.6g}: S(c)∩B(r) is empty.")
    if constants is not None and c >= constants.c0:
        logger.log(f"⚠️ c = {c:.4e} is not below c₀ = {constants.c0:.4e}; the local-minimum geometry is not "
                   f"guaranteed", indent_level=2)
    set_fft_workers(config.workers)

    benchmark = Benchmark(f"Local minimization (c = {c:.4e})")
    ops = operators_for(grid)
    start = init if init is not None else create_initial_field(config.init_kind, grid, c, config.seed,
                                                               config.init_path)
    monitor = _ball_monitor(grid, params, config.ball_norm, ball_radius or r)

    split = imaginary_time_descent(start, params, c, config.dt_imag,
                                   min(const.SPLIT_MAX_ITERS, config.max_iters), monitor=monitor)
    logger.log(f"🔄 Split stage: {split.iters} steps, residual proxy {split.residual:.3e}", indent_level=2,
               debug=True)
    history = list(split.history)
    polish = preconditioned_descent(
        split.field, c,
        objective=lambda values: energy_value(WaveField(grid, values), params),
        half_gradient=lambda values: hamiltonian_values(values, params, ops),
        tol=config.tol_grad, max_iters=max(config.max_iters - split.iters, 0), monitor=monitor, history=history)

    if polish.converged:
        logger.log(f"✅ Converged after {split.iters + polish.iters} iterations "
                   f"(residual {polish.residual:.3e})", indent_level=2)
    else:
        logger.log(f"⚠️ Not converged after {split.iters + polish.iters} iterations "
                   f"(residual {polish.residual:.3e})", indent_level=2)
    benchmark.print_time(level=2)

    report = build_report(polish.field, params, config, constants, polish.iters + split.iters, polish.residual,
                          polish.converged)
    report.stage_iters = (split.iters, polish.iters)
    report.energy_history = history
    return report


def build_report(u: WaveField, params: PhysicsParams, config: SolverConfig,
                 constants: Optional[RotationConstants], iters: int, residual: float,
                 converged: bool) -> GroundStateReport:
    """
    Gauges the final iterate and collects everything the report carries.

    Args:
        u: Final iterate on S(c).
        constants: When given, the ω window and distance bound are filled in.
        iters: Total descent iterations over both stages.
        residual: Last constrained-gradient norm.

    Returns:
        GroundStateReport: Region, multiplier, angular statistics and l₀ projection of the gauged field.
    """
    c, r = config.c, config.r
    u = _gauge(u, c)
    ops = operators_for(u.grid)
    parts: EnergyBreakdown = energy(u, params)
    l0 = project_l0(u)
    ball = ball_measure(u, params, config.ball_norm)
    lz_values = ops.apply_lz(u.values)
    angular_momentum = ops.inner(u.values, lz_values).real / parts.mass
    angular_spread = ops.mass(lz_values) / parts.mass - angular_momentum ** 2
    feasible = abs(parts.mass - c) <= 1e-10 * c and ball <= r
    return GroundStateReport(
        field=u,
        omega_c=parts.omega_est,
        energy=parts,
        iters=iters,
        grad_residual=residual,
        l0=l0,
        dist_sq_to_l0psi0=_dist_sq(u, l0),
        region=classify_region(ball, r, params.omega_mag),
        feasible=feasible,
        converged=converged,
        ball_value=ball,
        angular_momentum=angular_momentum,
        angular_spread=angular_spread,
        gaussian_energy=energy_value(create_gaussian(u.grid, c), params),
        distance_bound=distance_bound(params, constants, c) if constants else None,
        omega_window=omega_window(params, constants, c) if constants else None,
    )


def dist_to_gaussian(report: GroundStateReport) -> float:
    """‖u − l₀ψ₀‖_Σ² with l₀ = ∫uψ₀ recomputed from the report's field."""
    return _dist_sq(report.field, project_l0(report.field))


# ==================================================== ASYMPTOTICS ====================================================

def _sweep_row(params: PhysicsParams, base: SolverConfig, grid: GridSpec, c: float,
               constants: Optional[RotationConstants]) -> dict:
    """One table row; a numerical failure becomes a NaN row flagged with its error instead of aborting the sweep."""
    config = replace(base, c=c)
    try:
        report = minimize_local(params, config, grid, constants)
    except NumericalError as error:
        logger.log(f"❌ Row c = {c:.4e} failed: {error}", indent_level=2)
        return {"c": c, "m_over_c": np.nan, "omega_c": np.nan, "ratio_grad": np.nan, "ratio_trap": np.nan,
                "dist_sq": np.nan, "region": "", "converged": False, "sigma_dot": np.nan, "error": str(error)}
    parts = report.energy
    return {
        "c": c,
        "m_over_c": parts.total / c,
        "omega_c": report.omega_c,
        "ratio_grad": (2.0 * parts.kinetic - parts.rotation) / c,
        "ratio_trap": (2.0 * parts.trap - parts.rotation) / c,
        "dist_sq": report.dist_sq_to_l0psi0,
        "region": report.region.value,
        "converged": report.converged,
        "sigma_dot": parts.sigma_dot,
        "error": "",
    }


def asymptotics_sweep(params: PhysicsParams, r: float, c_list: Sequence[float], grid: Optional[GridSpec] = None,
                      base_config: Optional[SolverConfig] = None, constants: Optional[RotationConstants] = None,
                      workers: int = 1) -> pd.DataFrame:
    """
    Solves for every c and tabulates m_c^r/c, ω_c and the two ratios (‖∇u_c‖² − rot)/c and
    (‖xu_c‖² − rot)/c, which share a common limit as c → 0.

    Args:
        c_list: Strictly decreasing masses, each with S(c)∩B(r) non-empty.
        workers: Concurrent solves; rows are independent and re-sorted by c.

    Returns:
        pd.DataFrame: One row per c in ascending order; failed rows carry NaN and converged = False.
    """
    c_values = [float(c) for c in c_list]
    if not c_values:
        raise ValidationError("⚠️ c_list is empty.")
    if any(later >= earlier for earlier, later in zip(c_values, c_values[1:])):
        raise ValidationError(f"⚠️ c_list must be strictly decreasing, got {c_values}.")
    base = base_config or SolverConfig(c=c_values[0], r=r)
    for c in c_values:
        if not ball_feasible(params, c, r, base.ball_norm):
            raise ValidationError(f"⚠️ c = {c} > r/N = {r / params.dim:.6g}: S(c)∩B(r) is empty.")
        if constants is not None and c >= constants.c0:
            logger.log(f"⚠️ c = {c:.4e} is not below c₀ = {constants.c0:.4e}", indent_level=2)
    if params.is_mass_critical:
        logger.log("ℹ️ Mass-critical exponent: limit windows are not asserted for this sweep", indent_level=2)

    grid = grid or default_grid(params.dim)
    logger.log(f"🔄 Sweeping {len(c_values)} masses with {workers} worker(s)", indent_level=1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        rows = list(executor.map(lambda c: _sweep_row(params, base, grid, c, constants), c_values))
    return pd.DataFrame(rows).sort_values("c", ignore_index=True)


def distance_scaling_fit(table: pd.DataFrame, params: PhysicsParams) -> dict:
    """
    Least-squares slope of log dist_sq against log c over the converged rows, compared with the
    floor min(1, p(1−δ_p)/2) − 0.1.
    """
    rows = table[(table["converged"].astype(bool)) & (table["dist_sq"] > 0)]
    floor = min(1.0, params.p * (1.0 - params.delta_p) / 2.0) - 0.1
    if len(rows) < 2:
        return {"slope": None, "intercept": None, "floor": floor, "passes": False, "points": len(rows)}
    model = LinearRegression().fit(np.log(rows[["c"]].to_numpy()), np.log(rows["dist_sq"].to_numpy()))
    slope = float(model.coef_[0])
    return {"slope": slope, "intercept": float(model.intercept_), "floor": floor, "passes": slope >= floor,
            "points": len(rows)}


# ===================================================== GEOMETRY =====================================================

def _dilate_into_annulus(u: WaveField, low: float, high: float) -> WaveField:
    """
    Grid dilation moving ‖u‖_Σ̇² into [low, high].

    Σ̇ of u_τ is τ²‖∇u‖² + τ⁻²‖xu‖², so each round solves that quadratic for the root closest to
    τ = 1. The target sits inside the annulus by ANNULUS_MARGIN and the result is measured again,
    since spectral resampling does not hit the predicted value exactly.

    Args:
        u: Field of the annulus search, usually resting just outside one of the two radii.
        low: μr.
        high: r.

    Returns:
        WaveField: A dilate of u with low ≤ ‖·‖_Σ̇² ≤ high, or the last attempt when the rounds
            run out (the caller checks).

    Raises:
        NumericalError: if no dilation reaches the target (it lies below the Heisenberg floor
            2‖∇u‖‖xu‖ of the dilation orbit).
    """
    ops = operators_for(u.grid)
    inner_low, inner_high = low * (1.0 + const.ANNULUS_MARGIN), high * (1.0 - const.ANNULUS_MARGIN)
    field = u
    for _ in range(const.ANNULUS_DILATION_ROUNDS):
        grad_sq, trap_sq = ops.grad_sq(field.values), ops.xweighted_sq(field.values)
        current = grad_sq + trap_sq
        if low <= current <= high:
            return field
        target = min(max(current, inner_low), inner_high)
        discriminant = target ** 2 - 4.0 * grad_sq * trap_sq
        if discriminant < 0:
            raise NumericalError(f"⚠️ No dilation of the annulus iterate reaches Σ̇² = {target:.6g}.")
        roots = [(target + sign * math.sqrt(discriminant)) / (2.0 * grad_sq) for sign in (1.0, -1.0)]
        tau = min((math.sqrt(root) for root in roots if root > 0), key=lambda t: abs(math.log(t)))
        logger.log(f"ℹ️ Dilating the annulus iterate by τ = {tau:.8f} (Σ̇² {current:.6g} → {target:.6g})",
                   indent_level=2, debug=True)
        field = dilate(field, tau)
    return field


def geometry_probe(params: PhysicsParams, r: float, c: float, constants: RotationConstants,
                   grid: Optional[GridSpec] = None, base_config: Optional[SolverConfig] = None) -> GeometryProbeReport:
    """
    Estimates inf I over S(c)∩B(νr) (by the local solver) and over S(c)∩(B(r)∖B(μr)) (by a
    penalized descent that keeps ‖u‖_Σ̇² inside [μr, r]), and reports the gap between them together
    with the analytic floor of the annulus and ceiling of the ν-ball.
    """
    grid = grid or default_grid(params.dim)
    nu_r, mu_r = constants.nu * r, constants.mu * r
    if params.dim * c > nu_r:
        raise ValidationError(f"⚠️ c = {c} > νr/N = {nu_r / params.dim:.6g}: S(c)∩B(νr) is empty.")
    if c >= constants.c0:
        logger.log(f"⚠️ c = {c:.4e} is not below c₀ = {constants.c0:.4e}", indent_level=2)
    # caller's knobs, ball norm and workers included, with this mass and radius
    config = replace(base_config, c=c, r=r) if base_config is not None else SolverConfig(c=c, r=r)

    logger.log("🔄 ν-ball infimum", indent_level=1)
    inner = minimize_local(params, config, grid, constants, ball_radius=nu_r)

    logger.log("🔄 Annulus infimum", indent_level=1)
    ops = operators_for(grid)
    penalty = const.ANNULUS_PENALTY

    def penalty_weight(values: np.ndarray) -> tuple[float, float]:
        sigma_dot = ops.grad_sq(values) + ops.xweighted_sq(values)
        below, above = max(mu_r - sigma_dot, 0.0), max(sigma_dot - r, 0.0)
        return 0.5 * penalty * (below ** 2 + above ** 2), penalty * (above - below)

    def objective(values: np.ndarray) -> float:
        return energy_value(WaveField(grid, values), params) + penalty_weight(values)[0]

    def half_gradient(values: np.ndarray) -> np.ndarray:
        weight = penalty_weight(values)[1]
        gradient = hamiltonian_values(values, params, ops)
        if weight:
            gradient = gradient + weight * (ops.ifft(ops.k2 * ops.fft(values)) + ops.r2 * values)
        return gradient

    start = create_gaussian(grid, c, gaussian_scale_for(params.dim, c, 0.5 * (mu_r + r)))
    outer = preconditioned_descent(start, c, objective, half_gradient, tol=const.ANNULUS_TOL,
                                   max_iters=const.ANNULUS_MAX_ITERS)
    annulus_field = _dilate_into_annulus(outer.field, mu_r, r)
    annulus_parts = energy(annulus_field, params)
    if not mu_r <= annulus_parts.sigma_dot <= r:
        raise NumericalError(f"⚠️ Annulus search found no point with μr ≤ ‖u‖_Σ̇² ≤ r "
                             f"(got {annulus_parts.sigma_dot:.6g}).")

    gap = annulus_parts.total - inner.energy.total
    logger.log(f"{'✅' if gap > 0 else '❌'} Gap between annulus and ν-ball infima: {gap:.6e}", indent_level=1)
    return GeometryProbeReport(
        nu_ball_inf=inner.energy.total,
        annulus_estimate=annulus_parts.total,
        annulus_lower_bound=annulus_lower_bound(params, constants, c),
        nu_ball_upper_bound=nu_ball_upper_bound(constants),
        gap=gap,
        minimizer_region=inner.region,
        minimizer_sigma_dot=inner.energy.sigma_dot,
        annulus_sigma_dot=annulus_parts.sigma_dot,
        nu_radius=nu_r,
        mu_radius=mu_r,
        gap_positive=gap > 0.0,
    )
