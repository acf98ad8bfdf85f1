"""
Mass-constrained descent schemes on the sphere S(c) = {‖u‖₂² = c}.

Two stages share the bookkeeping here. The imaginary-time split step damps the stiff trap and
kinetic parts exactly and treats rotation explicitly; it is cheap but its fixed point carries an
O(dt²) bias. The preconditioned projected-gradient stage then converges to the exact discrete
Euler–Lagrange equation. Both stages renormalize after every step and never accept a step that
raises the objective beyond roundoff.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

import components.constants as const
import utils.logger as logger
from backend.functionals import energy_value, hamiltonian_values
from backend.solver_errors import NonFiniteFieldError
from backend.spectral_core import GridSpec, PhysicsParams, SpectralOperators, WaveField, operators_for

Objective = Callable[[np.ndarray], float]
HalfGradient = Callable[[np.ndarray], np.ndarray]
Monitor = Callable[[np.ndarray, float], None]


@dataclass
class DescentOutcome:
    field: WaveField
    value: float
    iters: int
    converged: bool
    residual: float
    history: list[float] = field(default_factory=list)


def stable_split_dt(grid: GridSpec, params: PhysicsParams, dt: float) -> float:
    """Clips dt to h/(|Ω|L), the bound of the explicit rotation update."""
    if params.omega_mag == 0.0:
        return dt
    bound = grid.spacing / (params.omega_mag * grid.half_width)
    if dt > bound:
        logger.log(f"⚠️ dt_imag = {dt:.3e} exceeds the rotation bound h/(|Ω|L) = {bound:.3e}; using the bound",
                   indent_level=2)
        return bound
    return dt


def renormalize(values: np.ndarray, c: float, ops: SpectralOperators) -> np.ndarray:
    """
    Rescales onto S(c).

    Raises:
        NonFiniteFieldError: if the iterate has no finite positive mass left to rescale.
    """
    current = ops.mass(values)
    if not (current > 0 and math.isfinite(current)):
        raise NonFiniteFieldError(f"⚠️ Iterate lost its mass (‖u‖₂² = {current}).")
    return values * math.sqrt(c / current)


def split_step(values: np.ndarray, params: PhysicsParams, ops: SpectralOperators, dt: float) -> np.ndarray:
    """One imaginary-time step: half potential decay, kinetic decay, explicit rotation, half potential decay."""
    def potential_decay(field_values: np.ndarray) -> np.ndarray:
        potential = 0.5 * ops.r2
        if params.a:
            potential = potential - params.a * np.abs(field_values) ** (params.p - 2.0)
        return np.exp(-0.5 * dt * potential) * field_values

    result = potential_decay(values)
    result = ops.ifft(np.exp(-0.5 * dt * ops.k2) * ops.fft(result))
    if params.omega_mag:
        result = result + dt * params.omega_mag * ops.apply_lz(result)
    return potential_decay(result)


def residual_proxy(residual: np.ndarray, ops: SpectralOperators) -> float:
    """Cheap spectrally equivalent stand-in for the Σ-dual norm (one preconditioner application)."""
    value = np.vdot(residual, ops.sigma_preconditioner(residual)).real * ops.cell_volume
    return math.sqrt(max(value, 0.0))


def imaginary_time_descent(start: WaveField, params: PhysicsParams, c: float, dt: float, max_iters: int,
                           handover_residual: float = const.SPLIT_HANDOVER_RESIDUAL,
                           monitor: Optional[Monitor] = None) -> DescentOutcome:
    """
    Runs split steps until the residual proxy drops below the handover level, the iteration cap
    is hit, or a step would raise the energy (that step is discarded).
    """
    ops = operators_for(start.grid)
    dt = stable_split_dt(start.grid, params, dt)
    values = renormalize(np.array(start.values), c, ops)
    value = energy_value(WaveField(start.grid, values), params)
    history = [value]
    residual = math.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        trial = renormalize(split_step(values, params, ops, dt), c, ops)
        trial_value = energy_value(WaveField(start.grid, trial), params)
        if trial_value > value + const.MONOTONE_TOLERANCE * max(abs(value), c):
            logger.log(f"ℹ️ Split step {iters} raised the energy; handing over", debug=True)
            iters -= 1
            break
        values, value = trial, trial_value
        history.append(value)
        if monitor is not None:
            monitor(values, value)
        if iters % const.RESIDUAL_CHECK_EVERY == 0:
            gradient = hamiltonian_values(values, params, ops)
            omega = ops.inner(values, gradient).real / c
            residual = residual_proxy(gradient - omega * values, ops)
            if residual < handover_residual:
                break
    return DescentOutcome(WaveField(start.grid, values), value, iters, False, residual, history)


def preconditioned_descent(start: WaveField, c: float, objective: Objective, half_gradient: HalfGradient,
                           tol: float, max_iters: int, monitor: Optional[Monitor] = None,
                           history: Optional[list[float]] = None) -> DescentOutcome:
    """
    Projected gradient descent on S(c) with the combined trap/kinetic preconditioner.

    The direction is −P(G − ωu) with G the half-gradient and ω = Re⟨u, G⟩/c, made tangent to the
    sphere in the real L² pairing. Steps adapt: growth after an accepted step, halving when the
    objective would rise. Convergence is the Σ-dual norm of the constrained residual ≤ tol.

    Args:
        start: Initial iterate; rescaled to mass c.
        c: Mass of the constraint sphere.
        objective: Value of the functional at a value array.
        half_gradient: Half the Fréchet gradient (H u for the energy).
        tol: Residual tolerance.
        max_iters: Iteration cap; running out is reported, not raised.
        monitor: Called with each accepted iterate and its value.
        history: List that accepted values are appended to.

    Returns:
        DescentOutcome: Final iterate, value, iteration count and convergence flag.
    """
    ops = operators_for(start.grid)
    history = history if history is not None else []
    values = renormalize(np.array(start.values), c, ops)
    value = objective(values)
    step = const.DESCENT_INITIAL_STEP
    previous_proxy = math.inf
    residual = math.inf
    converged = False
    iters = 0
    while True:
        gradient = half_gradient(values)
        omega = ops.inner(values, gradient).real / c
        constrained = gradient - omega * values
        proxy = residual_proxy(constrained, ops)
        if proxy <= const.RESIDUAL_PROXY_FACTOR * tol:
            residual = ops.sigma_dual_norm(constrained)
            if residual <= tol:
                converged = True
                break
        if iters >= max_iters:
            break
        if proxy > 2.0 * previous_proxy:
            step = max(0.5 * step, const.DESCENT_MIN_STEP)
        previous_proxy = proxy

        direction = -ops.hamiltonian_preconditioner(constrained)
        direction = direction - (ops.inner(values, direction).real / c) * values
        accepted = False
        while step >= const.DESCENT_MIN_STEP:
            trial = renormalize(values + step * direction, c, ops)
            trial_value = objective(trial)
            if trial_value <= value + const.MONOTONE_TOLERANCE * max(abs(value), c):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            logger.log(f"⚠️ Line search stalled after {iters} iterations", indent_level=2)
            break

        values, value = trial, trial_value
        iters += 1
        history.append(value)
        if monitor is not None:
            monitor(values, value)
        step = min(const.DESCENT_STEP_GROWTH * step, const.DESCENT_MAX_STEP)

    if not converged:
        gradient = half_gradient(values)
        omega = ops.inner(values, gradient).real / c
        residual = ops.sigma_dual_norm(gradient - omega * values)
    return DescentOutcome(WaveField(start.grid, values), value, iters, converged, residual, history)
