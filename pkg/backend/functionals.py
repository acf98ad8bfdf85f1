"""
Energy functional of the rotating NLS with harmonic trap, its Pohozaev functional and Lagrange
multiplier, the interpolation inequalities behind the local-minimum geometry, and the closed-form
constants (ν, μ, ε₀, C_*, C^*, c₀, ε₁, C₁, C₂, 𝒞_Ω) derived from them.

The nonlinear term ‖u‖_p^p is evaluated on the 2/3-filtered field when p is an even integer, so
|Fu|^p is a polynomial whose products stay alias-free. The matching force F(|Fu|^{p−2}Fu) makes
`hamiltonian_apply` the exact derivative of the discrete energy.
"""
import math
from typing import Optional

import numpy as np

import components.constants as const
from backend.solver_errors import ComponentError, ValidationError, ZeroMassError
from backend.solver_models import EnergyBreakdown, RotationConstants
from backend.spectral_core import PhysicsParams, WaveField, operators_for
from components.enums import BallNorm


def _check_finite(**components: float) -> None:
    """
    Raises:
        ComponentError: naming the first component that is NaN or infinite.
    """
    for name, value in components.items():
        if not math.isfinite(value):
            raise ComponentError(name, value)


def _leq(lhs: float, rhs: float, slack: float = const.CHECK_SLACK) -> bool:
    # relative slack absorbs quadrature roundoff on both sides
    return lhs <= rhs + slack * max(abs(lhs), abs(rhs))


# ================================================ ENERGY AND FRIENDS ================================================

def energy(u: WaveField, params: PhysicsParams) -> EnergyBreakdown:
    """
    Evaluates I(u) = ½‖∇u‖² + ½‖xu‖² − (2a/p)‖u‖_p^p − ∫ū(Ω·L)u component by component.

    Raises:
        ComponentError: if any component is NaN or Inf.
    """
    ops = operators_for(u.grid)
    values = u.values
    kinetic = 0.5 * ops.grad_sq(values)
    trap = 0.5 * ops.xweighted_sq(values)
    rotation = params.omega_mag * ops.lz_expectation(values) if params.omega_mag else 0.0
    p_norm = ops.p_norm_p(values, params.p, params.dealiased) if params.a else 0.0
    nonlinear = 2.0 * params.a / params.p * p_norm
    _check_finite(kinetic=kinetic, trap=trap, rotation=rotation, nonlinear=nonlinear)

    mass = ops.mass(values)
    sigma_dot = 2.0 * (kinetic + trap)
    pohozaev = kinetic - trap - params.a * params.delta_p * p_norm
    omega_est = (0.5 * sigma_dot - rotation - params.a * p_norm) / mass if mass > 0 else float("nan")
    return EnergyBreakdown(kinetic=kinetic, trap=trap, rotation=rotation, nonlinear=nonlinear,
                           total=kinetic + trap - nonlinear - rotation, sigma_dot=sigma_dot,
                           pohozaev=pohozaev, omega_est=omega_est, mass=mass)


def energy_value(u: WaveField, params: PhysicsParams) -> float:
    """I(u) alone, for callers that do not need the breakdown."""
    return energy(u, params).total


def pohozaev_Q(u: WaveField, params: PhysicsParams) -> float:
    """Q(u) = ½‖∇u‖² − ½‖xu‖² − aδ_p‖u‖_p^p."""
    return energy(u, params).pohozaev


def lagrange_omega(u: WaveField, params: PhysicsParams) -> float:
    """
    ω = (1/c)(½‖u‖_Σ̇² − ∫ū(Ω·L)u − a‖u‖_p^p), the multiplier of the constrained Euler–Lagrange
    equation evaluated at u.

    Raises:
        ZeroMassError: for a field with vanishing mass.
    """
    if u.mass() <= 0.0:
        raise ZeroMassError("⚠️ Lagrange multiplier undefined for a zero-mass field.")
    return energy(u, params).omega_est


def hamiltonian_values(values: np.ndarray, params: PhysicsParams, ops) -> np.ndarray:
    """Array-level H u on the grid of `ops`."""
    result = 0.5 * ops.ifft(ops.k2 * ops.fft(values)) + 0.5 * ops.r2 * values
    if params.omega_mag:
        result = result - params.omega_mag * ops.apply_lz(values)
    if params.a:
        result = result - params.a * ops.nonlinear_term(values, params.p, params.dealiased)
    return result


def hamiltonian_apply(u: WaveField, params: PhysicsParams) -> WaveField:
    """H u = −½Δu + ½|x|²u − |Ω|L_z u − a|u|^{p−2}u, so that I'(u) = 2Hu in the real L² pairing."""
    return WaveField(u.grid, hamiltonian_values(u.values, params, operators_for(u.grid)))


def energy_gradient(u: WaveField, params: PhysicsParams) -> WaveField:
    """Fréchet gradient of I: dI(u)[h] = Re⟨2Hu, h⟩."""
    return hamiltonian_apply(u, params).scaled(2.0)


def constrained_residual(u: WaveField, params: PhysicsParams) -> tuple[WaveField, float]:
    """Returns (Hu − ω(u)u, ω(u)); the residual vanishes exactly at constrained critical points."""
    ops = operators_for(u.grid)
    h_values = hamiltonian_values(u.values, params, ops)
    mass = ops.mass(u.values)
    if mass <= 0.0:
        raise ZeroMassError("⚠️ Constrained residual undefined for a zero-mass field.")
    omega = ops.inner(u.values, h_values).real / mass
    return WaveField(u.grid, h_values - omega * u.values), omega


# =================================================== INEQUALITIES ===================================================

def gn_check(u: WaveField, params: PhysicsParams, gn_const: float) -> tuple[float, float, bool]:
    """Gagliardo–Nirenberg: ‖u‖_p ≤ C₍N,p₎‖∇u‖₂^{δ_p}‖u‖₂^{1−δ_p}."""
    if gn_const <= 0:
        raise ValidationError(f"⚠️ gn_const must be positive, got {gn_const}.")
    ops = operators_for(u.grid)
    lhs = ops.p_norm_p(u.values, params.p, params.dealiased) ** (1.0 / params.p)
    delta = params.delta_p
    rhs = gn_const * math.sqrt(ops.grad_sq(u.values)) ** delta * math.sqrt(ops.mass(u.values)) ** (1.0 - delta)
    return lhs, rhs, lhs <= rhs * (1.0 + const.CHECK_SLACK)


def weinstein_check(u: WaveField) -> tuple[float, float, bool]:
    """‖u‖₂² ≤ (2/N)‖∇u‖₂‖xu‖₂, with equality for centred Gaussians."""
    ops = operators_for(u.grid)
    lhs = ops.mass(u.values)
    rhs = 2.0 / u.grid.dim * math.sqrt(ops.grad_sq(u.values) * ops.xweighted_sq(u.values))
    return lhs, rhs, _leq(lhs, rhs)


def rotation_interpolation_check(u: WaveField, omega_mag: float, eps: float) -> tuple[float, float, float, bool]:
    """|⟨u,(Ω·L)u⟩| ≤ ‖(Ω∧x)u‖₂‖∇u‖₂ ≤ (|Ω|²/2ε)‖xu‖₂² + (ε/2)‖∇u‖₂²."""
    if not eps > 0:
        raise ValidationError(f"⚠️ eps must be positive, got {eps}.")
    ops = operators_for(u.grid)
    lhs = omega_mag * abs(ops.inner(u.values, ops.apply_lz(u.values)))
    grad_sq = ops.grad_sq(u.values)
    mid = omega_mag * math.sqrt(ops.rho_weighted_sq(u.values) * grad_sq)
    rhs = omega_mag ** 2 / (2.0 * eps) * ops.xweighted_sq(u.values) + 0.5 * eps * grad_sq
    return lhs, mid, rhs, _leq(lhs, mid) and _leq(mid, rhs)


def norm_omega1(u: WaveField, omega_mag: float) -> float:
    """½‖u‖_Σ̇² − ∫ū(Ω·L)u, equivalent to ‖u‖_Σ̇² for |Ω| < 1."""
    ops = operators_for(u.grid)
    sigma_dot = ops.grad_sq(u.values) + ops.xweighted_sq(u.values)
    rotation = omega_mag * ops.lz_expectation(u.values) if omega_mag else 0.0
    return 0.5 * sigma_dot - rotation


def norm_omega2(u: WaveField, params: PhysicsParams) -> float:
    """
    (½ − 1/(pδ_p))‖∇u‖² + (½ + 1/(pδ_p))‖xu‖² − ∫ū(Ω·L)u: the energy on the Pohozaev set.

    Raises:
        ValidationError: unless p is mass-supercritical (pδ_p > 2).
    """
    if params.p_delta <= 2.0 + 1e-12:
        raise ValidationError(f"⚠️ norm_omega2 needs pδ_p > 2, got pδ_p = {params.p_delta:.6g}.")
    ops = operators_for(u.grid)
    inverse = 1.0 / params.p_delta
    rotation = params.omega_mag * ops.lz_expectation(u.values) if params.omega_mag else 0.0
    return ((0.5 - inverse) * ops.grad_sq(u.values) + (0.5 + inverse) * ops.xweighted_sq(u.values)
            - rotation)


def ball_measure(u: WaveField, params: PhysicsParams, ball_norm: BallNorm = BallNorm.SIGMA_DOT) -> float:
    """Quantity compared against r for membership in B(r)."""
    if BallNorm(ball_norm) is BallNorm.OMEGA1:
        return norm_omega1(u, params.omega_mag)
    ops = operators_for(u.grid)
    return ops.grad_sq(u.values) + ops.xweighted_sq(u.values)


def ball_feasible(params: PhysicsParams, c: float, r: float, ball_norm: BallNorm = BallNorm.SIGMA_DOT) -> bool:
    """
    S(c)∩B(r) is non-empty iff the smallest ball value on S(c) fits: Nc ≤ r for the Σ̇ ball,
    Nc/2 ≤ r for the Ω1 ball (both attained by √c ψ₀).
    """
    smallest = params.dim * c if BallNorm(ball_norm) is BallNorm.SIGMA_DOT else 0.5 * params.dim * c
    return smallest <= r * (1.0 + 1e-12)


# ===================================================== CONSTANTS =====================================================

def lower_sandwich_constant(omega_mag: float, eps: float) -> float:
    """C_*(Ω, ε) = min{(1−ε)/2, ½ − |Ω|²/(2ε)}."""
    return min(0.5 * (1.0 - eps), 0.5 - omega_mag ** 2 / (2.0 * eps))


def upper_sandwich_constant(omega_mag: float, eps: float) -> float:
    """C^*(Ω, ε) = max{(1+ε)/2, ½ + |Ω|²/(2ε)}."""
    return max(0.5 * (1.0 + eps), 0.5 + omega_mag ** 2 / (2.0 * eps))


def frequency_condition(params: PhysicsParams) -> bool:
    """|Ω| < √(1 − (2/(pδ_p))²); needs strict mass supercriticality."""
    if params.p_delta <= 2.0 + 1e-12:
        return False
    return params.omega_mag < math.sqrt(1.0 - (2.0 / params.p_delta) ** 2)


def _gn_factor(params: PhysicsParams, r: float, gn_const: float) -> float:
    """a·C₍N,p₎^p·r^{(pδ_p−2)/2}, the common factor of the c₀ bracket terms."""
    return params.a * gn_const ** params.p * r ** ((params.p_delta - 2.0) / 2.0)


def compute_constants(params: PhysicsParams, r: float, gn_const: float) -> RotationConstants:
    """
    Evaluates every closed-form constant of the local-minimum geometry for (r, a, |Ω|, N, p).

    c₀ is the minimum of (1−|Ω|)r/(4N) and two power-law thresholds in a·C₍N,p₎^p. ε₁ is the
    midpoint of its admissible interval; ε₁, C₁, C₂ and 𝒞_Ω stay None when the frequency
    condition fails.

    Raises:
        ValidationError: for |Ω| ∉ (0,1), r ≤ 0 or gn_const ≤ 0.
    """
    omega = params.omega_mag
    if not 0.0 < omega < 1.0:
        raise ValidationError(f"⚠️ compute_constants needs 0 < |Ω| < 1, got {omega}.")
    if not r > 0:
        raise ValidationError(f"⚠️ r must be positive, got {r}.")
    if not gn_const > 0:
        raise ValidationError(f"⚠️ gn_const must be positive, got {gn_const}.")

    nu = (1.0 - omega) / 4.0
    mu = (1.0 + omega) / 2.0
    eps0 = omega * (3.0 + omega) / (1.0 + 3.0 * omega)
    c_star = (1.0 - omega ** 2) / (2.0 * (1.0 + 3.0 * omega))
    c_upper = (1.0 + 6.0 * omega + omega ** 2) / (2.0 * (1.0 + 3.0 * omega))

    factor = _gn_factor(params, r, gn_const)
    exponent = 2.0 / (params.p * (1.0 - params.delta_p))
    terms = [(1.0 - omega) * r / (4.0 * params.dim)]
    if factor > 0:
        terms.append((params.p * (1.0 - omega) ** 3 / (16.0 * (1.0 + 3.0 * omega) * factor)) ** exponent)
        terms.append(((1.0 - omega ** 2) / (2.0 * (1.0 + 3.0 * omega) * factor)) ** exponent)
    c0 = min(terms)

    frequency_ok = frequency_condition(params)
    eps1 = c1 = c2 = c_omega = interval = None
    if frequency_ok:
        pd_ = params.p_delta
        interval = (pd_ * omega ** 2 / (pd_ + 2.0), 1.0 - 2.0 / pd_)
        eps1 = 0.5 * (interval[0] + interval[1])
        c1 = 0.5 - 1.0 / pd_ - 0.5 * eps1
        c2 = 0.5 + 1.0 / pd_ - omega ** 2 / (2.0 * eps1)
        c_omega = min(c1, c2)

    return RotationConstants(nu=nu, mu=mu, eps0=eps0, c_star=c_star, c_upper=c_upper, eps1=eps1, c1=c1,
                             c2=c2, c_omega=c_omega, c0=c0, gn_const=gn_const, r=r, a=params.a,
                             frequency_ok=frequency_ok, eps1_interval=interval)


def omega_window(params: PhysicsParams, constants: RotationConstants, c: float) -> tuple[float, float]:
    """(N(C_* − aC^p r^{(pδ_p−2)/2}c^{p(1−δ_p)/2}), N/2): where ω_c of a minimizer must fall."""
    tail = _gn_factor(params, constants.r, constants.gn_const) * c ** (params.p * (1.0 - params.delta_p) / 2.0)
    return params.dim * (constants.c_star - tail), 0.5 * params.dim


def annulus_lower_bound(params: PhysicsParams, constants: RotationConstants, c: float) -> float:
    """μr(C_* − (2a/p)C^p r^{(pδ_p−2)/2}c^{p(1−δ_p)/2}), a floor for I on S(c)∩(B(r)∖B(μr))."""
    tail = _gn_factor(params, constants.r, constants.gn_const) * c ** (params.p * (1.0 - params.delta_p) / 2.0)
    return constants.mu * constants.r * (constants.c_star - 2.0 / params.p * tail)


def nu_ball_upper_bound(constants: RotationConstants) -> float:
    """νrC^*, a ceiling for I on S(c)∩B(νr)."""
    return constants.nu * constants.r * constants.c_upper


def distance_bound(params: PhysicsParams, constants: RotationConstants, c: float) -> float:
    """Explicit O(c + c^{p(1−δ_p)/2}) bound on ‖u_c − l₀ψ₀‖_Σ² over the minimizer set."""
    omega, n = params.omega_mag, params.dim
    linear = (1.0 + 3.0 * omega) / (1.0 - omega ** 2) * c
    nonlinear = (4.0 * (1.0 + 3.0 * omega) * params.a * constants.gn_const ** params.p
                 / (params.p * n * (1.0 - omega ** 2))
                 * constants.r ** (params.p_delta / 2.0) * c ** (params.p * (1.0 - params.delta_p) / 2.0))
    return (n + 1.0) * (linear + nonlinear)


# ===================================================== DILATION =====================================================

def dilate(u: WaveField, tau: float) -> WaveField:
    """u_τ(x) = τ^{N/2}u(τx); mass-preserving up to the tail-leak tolerance."""
    return WaveField(u.grid, operators_for(u.grid).dilate(u.values, tau))


def kappa(u: WaveField, theta: float) -> WaveField:
    """κ(u, θ) = e^{Nθ/2}u(e^θ x)."""
    if theta == 0.0:
        return u
    return dilate(u, math.exp(theta))


def tilde_I(u: WaveField, theta: float, params: PhysicsParams, closed_form: bool = True,
            breakdown: Optional[EnergyBreakdown] = None) -> float:
    """
    Ĩ(u, θ) = I(κ(u, θ)). The closed form rescales the undilated components:
    e^{2θ}·kinetic + e^{−2θ}·trap − e^{pδ_pθ}·nonlinear − rotation. With closed_form=False the
    field is dilated on the grid and I is evaluated directly.
    """
    if not closed_form:
        return energy(kappa(u, theta), params).total
    parts = breakdown or energy(u, params)
    return (math.exp(2.0 * theta) * parts.kinetic + math.exp(-2.0 * theta) * parts.trap
            - math.exp(params.p_delta * theta) * parts.nonlinear - parts.rotation)


def tilde_I_slope(u: WaveField, params: PhysicsParams, step: float = 1e-4) -> float:
    """Central difference of θ ↦ Ĩ(u, θ) at θ = 0 through grid dilations; equals 2Q(u)."""
    forward = energy(kappa(u, step), params).total
    backward = energy(kappa(u, -step), params).total
    return (forward - backward) / (2.0 * step)
