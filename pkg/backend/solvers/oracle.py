"""
Radial ground state W_p of −ΔW + (1/δ_p − 1)W = (2/(pδ_p))W^{p−1} by bisection shooting, and the
sharp Gagliardo–Nirenberg constant C₍N,p₎ = (p/(2‖W_p‖₂^{p−2}))^{1/p} it determines.

The shot is integrated until W has fallen to a small fraction of W(0); beyond that radius the
profile is continued by the decaying solution r^{1−N/2}K_{N/2−1}(√β r) of the linearized equation,
since no double-precision shot stays on the ground state out to the far field.
"""
import math
from typing import Literal, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn
from scipy.special import kv

import components.constants as const
import utils.logger as logger
from backend.solver_errors import BracketError, ValidationError
from backend.solver_models import RadialProfile
from backend.spectral_core import GridSpec, WaveField, operators_for
from utils.benchmark import Benchmark

Outcome = Literal["over", "under", "none"]


def delta_exponent(dim: int, p: float) -> float:
    """δ_p = N(p−2)/(2p)."""
    return dim * (p - 2.0) / (2.0 * p)


def _coefficients(dim: int, p: float) -> tuple[float, float]:
    """(β, γ) = (1/δ_p − 1, 2/(pδ_p))."""
    delta = delta_exponent(dim, p)
    return 1.0 / delta - 1.0, 2.0 / (p * delta)


def default_radius(dim: int, p: float) -> float:
    """
    Outer radius of the shooting interval.

    Args:
        dim: Dimension N.
        p: Nonlinearity exponent.

    Returns:
        float: max(20, 26/√β), so the tail falls below the decay level before R.
    """
    beta, _ = _coefficients(dim, p)
    return max(20.0, 26.0 / math.sqrt(beta))


def sphere_area(dim: int) -> float:
    # |S^{N−1}| = 2π^{N/2}/Γ(N/2)
    return 2.0 * math.pi ** (dim / 2.0) / gamma_fn(dim / 2.0)


def _validate(dim: int, p: float, radius: float, n_points: int) -> None:
    """
    Raises:
        ValidationError: for N outside {2, 3}, p outside (2, 2*), or a radius or grid below the minimums.
    """
    if dim not in (2, 3):
        raise ValidationError(f"⚠️ N must be 2 or 3, got {dim}.")
    critical = math.inf if dim == 2 else 2.0 * dim / (dim - 2.0)
    if not 2.0 < p < critical:
        raise ValidationError(f"⚠️ p must lie strictly between 2 and 2* = {critical}, got {p}.")
    if radius < const.ORACLE_MIN_RADIUS:
        raise ValidationError(f"⚠️ R must be at least {const.ORACLE_MIN_RADIUS}, got {radius}.")
    if n_points < const.ORACLE_MIN_POINTS:
        raise ValidationError(f"⚠️ n_points must be at least {const.ORACLE_MIN_POINTS}, got {n_points}.")


class RadialShooter:
    """
    Shoots W'' + ((N−1)/r)W' = βW − γ|W|^{p−2}W from W(0) = s, W'(0) = 0.

    A shot that crosses zero overshoots the ground state; one whose derivative turns positive
    while W > 0 undershoots it. The ground state is the boundary between the two classes.
    """

    def __init__(self, dim: int, p: float, radius: float):
        self.dim = dim
        self.p = p
        self.radius = radius
        self.beta, self.gamma = _coefficients(dim, p)

    def _force(self, w):
        return self.beta * w - self.gamma * np.abs(w) ** (self.p - 2.0) * w

    def rhs(self, r: float, y: np.ndarray) -> list:
        w, dw = y
        return [dw, self._force(w) - (self.dim - 1.0) / r * dw]

    def series_start(self, s: float, r: float = const.SHOOT_ORIGIN) -> tuple[float, float]:
        """W(r) ≈ s + f(s)r²/(2N), W'(r) ≈ f(s)r/N near the origin."""
        curvature = self._force(s) / self.dim
        return s + 0.5 * curvature * r * r, curvature * r

    def shoot(self, s: float, match_level: Optional[float] = None, dense: bool = False):
        w0, dw0 = self.series_start(s)
        if dw0 >= 0.0:
            return "under", None

        def crossing(r, y):
            return y[0]

        def turning(r, y):
            return y[1]

        crossing.terminal, crossing.direction = True, -1
        turning.terminal, turning.direction = True, 1
        events = [crossing, turning]
        if match_level is not None:
            def matched(r, y):
                return y[0] - match_level * s

            matched.terminal, matched.direction = True, -1
            events.append(matched)

        solution = solve_ivp(self.rhs, (const.SHOOT_ORIGIN, self.radius), [w0, dw0], method="DOP853",
                             rtol=const.SHOOT_RTOL, atol=const.SHOOT_ATOL, events=events, dense_output=dense)
        outcome: Outcome = "none"
        if len(solution.t_events[0]):
            outcome = "over"
        elif len(solution.t_events[1]):
            outcome = "under"
        return outcome, solution

    def refine_bracket(self, low: float, high: float) -> tuple[float, float]:
        """
        Narrows [low, high] to the first under/over pair on a geometric scan, so a bracket that
        straddles several sign changes of the shot is cut down to the lowest one.

        Raises:
            BracketError: if no scanned point overshoots.
        """
        previous = low
        for candidate in np.geomspace(low, high, const.BRACKET_SCAN_POINTS)[1:]:
            if self.shoot(float(candidate))[0] == "over":
                return previous, float(candidate)
            previous = float(candidate)
        raise BracketError(f"⚠️ No overshooting value in [{low:g}, {high:g}] for N={self.dim}, p={self.p}.")

    def bisect(self, low: float = const.SHOOT_BRACKET[0], high: float = const.SHOOT_BRACKET[1]) -> float:
        """
        Returns the undershooting end of the final bracket around the ground-state value W(0).

        Raises:
            BracketError: if [low, high] does not separate an undershoot from an overshoot.
        """
        if self.shoot(low)[0] != "under" or self.shoot(high)[0] != "over":
            raise BracketError(f"⚠️ No shooting bracket in [{low:g}, {high:g}] for N={self.dim}, p={self.p}.")
        for _ in range(const.SHOOT_MAX_BISECTIONS):
            middle = math.sqrt(low * high) if high > 4.0 * low else 0.5 * (low + high)
            if not low < middle < high:
                break
            outcome, _ = self.shoot(middle)
            if outcome == "over":
                high = middle
            elif outcome == "under":
                low = middle
            else:
                return middle
        return low


def _tail(radii: np.ndarray, amplitude: float, dim: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """A·r^{−ν}K_ν(√β r) with ν = N/2 − 1, and its derivative −√β·A·r^{−ν}K_{ν+1}(√β r)."""
    order, rate = dim / 2.0 - 1.0, math.sqrt(beta)
    values = amplitude * radii ** (-order) * kv(order, rate * radii)
    slopes = -rate * amplitude * radii ** (-order) * kv(order + 1.0, rate * radii)
    return values, slopes


def _ode_residual(shooter: RadialShooter, solution, radii: np.ndarray, match_radius: float,
                  tail_values: np.ndarray) -> float:
    """Max-norm residual of the radial ODE on [10⁻³, R−2]; the tail only misses the nonlinear term."""
    trusted = radii[(radii >= 1e-3) & (radii <= shooter.radius - 2.0)]
    inner = trusted[trusted <= match_radius - 1e-5]
    eta = 1e-5
    w, dw = solution.sol(inner)
    second = (solution.sol(inner + eta)[1] - solution.sol(inner - eta)[1]) / (2.0 * eta)
    residual = np.abs(second + (shooter.dim - 1.0) / inner * dw - shooter.beta * w
                      + shooter.gamma * np.abs(w) ** (shooter.p - 2.0) * w)
    outer = np.abs(shooter.gamma * np.abs(tail_values) ** (shooter.p - 1.0))
    return float(max(np.max(residual, initial=0.0), np.max(outer, initial=0.0)))


def _sample_shot(shooter: RadialShooter, shoot_value: float, radii: np.ndarray):
    """
    Samples the shot from W(0) = shoot_value on `radii`, with the Bessel tail past the match radius.

    Returns:
        (solution, match_radius, values, slopes), or None when the shot is not a positive
        decreasing profile that reaches the tail level.
    """
    _, solution = shooter.shoot(shoot_value, match_level=const.TAIL_MATCH_LEVEL, dense=True)
    if not len(solution.t_events[2]):
        logger.log(f"⚠️ The shot from W(0) = {shoot_value:.12g} never fell to {const.TAIL_MATCH_LEVEL:g}·W(0)",
                   indent_level=2)
        return None
    match_radius = float(solution.t_events[2][0])
    n_points = len(radii)
    values, slopes = np.empty(n_points), np.empty(n_points)
    core = radii < const.SHOOT_ORIGIN
    body = (~core) & (radii <= match_radius)
    far = radii > match_radius
    curvature = shooter._force(shoot_value) / shooter.dim
    values[core], slopes[core] = shoot_value + 0.5 * curvature * radii[core] ** 2, curvature * radii[core]
    values[body], slopes[body] = solution.sol(radii[body])
    w_match = solution.sol(match_radius)[0]
    order = shooter.dim / 2.0 - 1.0
    amplitude = w_match / (match_radius ** (-order) * kv(order, math.sqrt(shooter.beta) * match_radius))
    values[far], slopes[far] = _tail(radii[far], amplitude, shooter.dim, shooter.beta)
    if np.any(values <= 0.0) or np.any(np.diff(values) > 0.0):
        logger.log(f"⚠️ The shot from W(0) = {shoot_value:.12g} is not positive and decreasing (excited state)",
                   indent_level=2)
        return None
    return solution, match_radius, values, slopes


def solve_Wp(N: int, p: float, R: Optional[float] = None, n_points: int = const.ORACLE_MIN_POINTS) -> RadialProfile:
    """
    Computes the positive radial ground state W_p on a uniform grid of [0, R].

    Args:
        N: Dimension, 2 or 3.
        p: Exponent with 2 < p < 2*.
        R: Outer radius; defaults to max(20, 26/√β) so the decay check can pass.
        n_points: Grid size, at least 4096.

    Returns:
        RadialProfile: Profile, derivative, ‖W‖₂² and the ODE and identity defects.

    Raises:
        ValidationError: for arguments outside their ranges.
        BracketError: if no bracket exists, or no refined bracket yields a positive decreasing profile.
    """
    R = R if R else default_radius(N, p)
    _validate(N, p, R, n_points)
    benchmark = Benchmark(f"Radial ground state (N={N}, p={p:g})")
    shooter = RadialShooter(N, p, R)
    radii = np.linspace(0.0, R, n_points)
    low, high = const.SHOOT_BRACKET
    sample = None
    for _ in range(const.BRACKET_REFINEMENTS + 1):
        shoot_value = shooter.bisect(low, high)
        sample = _sample_shot(shooter, shoot_value, radii)
        if sample is not None:
            break
        # the bisection settled on the wrong sign change; shrink the bracket below it and retry
        low, high = shooter.refine_bracket(low, high)
    if sample is None:
        raise BracketError(f"⚠️ No positive decreasing ground state for N={N}, p={p} after "
                           f"{const.BRACKET_REFINEMENTS} bracket refinements.")
    solution, match_radius, values, slopes = sample
    far = radii > match_radius

    area = sphere_area(N)
    weight = radii ** (N - 1)
    l2_sq = area * simpson(values ** 2 * weight, x=radii)
    grad_sq = area * simpson(slopes ** 2 * weight, x=radii)
    p_norm = area * simpson(values ** p * weight, x=radii)
    residual = _ode_residual(shooter, solution, radii, match_radius, values[far])

    profile = RadialProfile(
        radii=radii, values=values, derivative=slopes, dim=N, p=p, l2_sq=float(l2_sq),
        decay_ok=bool(values[-1] < const.DECAY_LEVEL * values[0]), shoot_value=shoot_value,
        match_radius=match_radius, residual_max=residual,
        pohozaev_defect=abs(grad_sq / l2_sq - 1.0),
        nehari_defect=abs(p_norm / (0.5 * p * l2_sq) - 1.0),
    )
    logger.log(f"✅ W(0) = {shoot_value:.12f}, ‖W‖₂² = {l2_sq:.10f}, ODE residual {residual:.2e}", indent_level=2)
    if profile.residual_max > const.ODE_RESIDUAL_TOLERANCE:
        logger.log(f"⚠️ ODE residual {residual:.2e} exceeds {const.ODE_RESIDUAL_TOLERANCE:g}", indent_level=2)
    benchmark.print_time(level=2)
    return profile


def gn_constant(profile: RadialProfile) -> float:
    """C₍N,p₎ = (p/(2‖W‖₂^{p−2}))^{1/p}."""
    if not profile.decay_ok:
        raise ValidationError("⚠️ The profile has not decayed inside [0, R]; enlarge R before using it.")
    return (profile.p / (2.0 * profile.l2_sq ** ((profile.p - 2.0) / 2.0))) ** (1.0 / profile.p)


def radialize(profile: RadialProfile, grid: GridSpec, scale: float = 1.0) -> WaveField:
    """Samples W(scale·|x|) on the grid by cubic-spline interpolation; zero beyond R."""
    if grid.dim != profile.dim:
        raise ValidationError(f"⚠️ Grid dimension {grid.dim} differs from the profile dimension {profile.dim}.")
    spline = CubicSpline(profile.radii, profile.values, bc_type=((1, 0.0), "natural"))
    if not scale > 0:
        raise ValidationError(f"⚠️ scale must be positive, got {scale}.")
    distance = scale * np.sqrt(operators_for(grid).r2)
    values = np.where(distance <= profile.radii[-1], spline(np.minimum(distance, profile.radii[-1])), 0.0)
    return WaveField(grid, values.astype(np.complex128))
