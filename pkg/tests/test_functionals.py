import math

import numpy as np
import pytest

from backend.functionals import (ball_feasible, compute_constants, constrained_residual, dilate, distance_bound,
                                 energy, energy_gradient, energy_value, frequency_condition, gn_check, kappa,
                                 lagrange_omega, lower_sandwich_constant, norm_omega1, norm_omega2, omega_window,
                                 pohozaev_Q, rotation_interpolation_check, tilde_I, tilde_I_slope,
                                 upper_sandwich_constant, weinstein_check)
from backend.solver_errors import ValidationError, ZeroMassError
from backend.spectral_core import PhysicsParams, WaveField, make_grid, operators_for
from components.enums import BallNorm
from components.factories.field_factory import create_gaussian, create_vortex


@pytest.fixture
def fine_grid():
    return make_grid(2, 128, 8.0)


# --- energy ---

def test_free_gaussian_energy(fine_grid):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.3)
    parts = energy(create_gaussian(fine_grid, 0.1), params)
    assert parts.total == pytest.approx(0.1, abs=1e-8)
    assert parts.rotation == pytest.approx(0.0, abs=1e-14)
    assert parts.pohozaev == pytest.approx(0.0, abs=1e-8)


def test_attractive_gaussian_energy(fine_grid):
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.0)
    parts = energy(create_gaussian(fine_grid, 0.1), params)
    assert parts.nonlinear == pytest.approx(0.5 * 0.01 / (2.0 * math.pi), abs=1e-8)
    assert parts.total < 0.1


def test_energy_components_add_up(grid2, params2, random_field):
    parts = energy(random_field(grid2), params2)
    expected = parts.kinetic + parts.trap - parts.nonlinear - parts.rotation
    assert parts.total == pytest.approx(expected, rel=1e-12)


def test_pohozaev_of_dilated_gaussian(fine_grid):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0)
    c, tau = 0.1, 2.0
    value = pohozaev_Q(dilate(create_gaussian(fine_grid, c), tau), params)
    assert value == pytest.approx(0.5 * (tau ** 2 - tau ** -2) * c, rel=1e-8)


def test_lagrange_omega_of_oscillator_states(fine_grid):
    free = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.5)
    assert lagrange_omega(create_gaussian(fine_grid, 0.1), free) == pytest.approx(1.0, abs=1e-8)
    vortex = create_vortex(fine_grid).normalized(0.1)
    assert lagrange_omega(vortex, free) == pytest.approx(1.5, rel=1e-8)


def test_lagrange_omega_needs_mass(grid2, params2):
    with pytest.raises(ZeroMassError):
        lagrange_omega(WaveField(grid2, np.zeros(grid2.shape)), params2)


@pytest.mark.parametrize("p", [4.0, 5.0])
def test_energy_gradient_is_derivative(grid2, random_field, p):
    params = PhysicsParams(dim=2, a=1.0, p=p, omega_mag=0.2)
    u = random_field(grid2, 0).scaled(0.5)
    h = random_field(grid2, 1)
    step = 1e-5
    forward = energy_value(u.with_values(u.values + step * h.values), params)
    backward = energy_value(u.with_values(u.values - step * h.values), params)
    pairing = operators_for(grid2).inner(energy_gradient(u, params).values, h.values).real
    assert (forward - backward) / (2.0 * step) == pytest.approx(pairing, rel=1e-6)


def test_constrained_residual_vanishes_on_eigenstate(grid2):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.4)
    residual, omega = constrained_residual(create_gaussian(grid2, 0.05), params)
    assert omega == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(residual.values)) < 1e-10


# --- inequalities ---

def test_weinstein_gaussian_equality(fine_grid):
    lhs, rhs, holds = weinstein_check(create_gaussian(fine_grid, 1.0))
    assert lhs / rhs == pytest.approx(1.0, abs=1e-10)
    assert holds


def test_weinstein_holds_on_random_fields(grid2, random_field):
    assert all(weinstein_check(random_field(grid2, index))[2] for index in range(25))


def test_gn_check_on_random_fields(grid2, params2, random_field):
    # C_{2,4}⁴ = 2/‖W‖₂² with ‖W‖₂² ≈ 11.70
    gn_const = (2.0 / 11.70) ** 0.25
    assert all(gn_check(random_field(grid2, index), params2, gn_const)[2] for index in range(25))


def test_gn_check_rejects_bad_constant(grid2, params2, random_field):
    with pytest.raises(ValidationError):
        gn_check(random_field(grid2), params2, 0.0)


def test_rotation_chain_on_vortex(fine_grid):
    vortex = create_vortex(fine_grid)
    lhs, mid, rhs, holds = rotation_interpolation_check(vortex, 0.5, 0.5)
    ops = operators_for(fine_grid)
    assert holds
    assert mid == pytest.approx(0.5 * math.sqrt(ops.xweighted_sq(vortex.values) * ops.grad_sq(vortex.values)),
                                rel=1e-12)
    assert lhs <= mid <= rhs


def test_rotation_chain_equality_point(grid2, random_field):
    u = random_field(grid2)
    ops = operators_for(grid2)
    eps = 0.3 * math.sqrt(ops.xweighted_sq(u.values) / ops.grad_sq(u.values))
    _, mid, rhs, holds = rotation_interpolation_check(u, 0.3, eps)
    assert holds
    assert mid == pytest.approx(rhs, rel=1e-8)


def test_rotation_chain_on_real_field(grid2, random_field):
    real_field = WaveField(grid2, random_field(grid2).values.real)
    lhs, mid, rhs, holds = rotation_interpolation_check(real_field, 0.4, 0.7)
    assert holds and lhs < 1e-10 * rhs


def test_norm_omega1_sandwich(grid2, random_field):
    omega = 1.0 / 3.0
    eps0 = omega * (3.0 + omega) / (1.0 + 3.0 * omega)
    lower, upper = lower_sandwich_constant(omega, eps0), upper_sandwich_constant(omega, eps0)
    assert lower == pytest.approx(2.0 / 9.0)
    assert upper == pytest.approx(7.0 / 9.0)
    ops = operators_for(grid2)
    for index in range(50):
        u = random_field(grid2, index)
        sigma_dot = ops.grad_sq(u.values) + ops.xweighted_sq(u.values)
        assert lower * sigma_dot * (1 - 1e-10) <= norm_omega1(u, omega) <= upper * sigma_dot * (1 + 1e-10)


def test_norm_omega1_of_real_field(grid2, random_field):
    real_field = WaveField(grid2, random_field(grid2).values.real)
    ops = operators_for(grid2)
    sigma_dot = ops.grad_sq(real_field.values) + ops.xweighted_sq(real_field.values)
    assert norm_omega1(real_field, 0.6) == pytest.approx(0.5 * sigma_dot, rel=1e-10)


def test_norm_omega2_lower_bound(grid3, params3, random_field):
    constants = compute_constants(params3, 1.0, 1.0)
    assert constants.frequency_ok
    ops = operators_for(grid3)
    for index in range(10):
        u = random_field(grid3, index)
        sigma_dot = ops.grad_sq(u.values) + ops.xweighted_sq(u.values)
        assert norm_omega2(u, params3) >= constants.c_omega * sigma_dot * (1 - 1e-10)


def test_norm_omega2_needs_supercritical(grid2, params2, random_field):
    with pytest.raises(ValidationError):
        norm_omega2(random_field(grid2), params2)


# --- constants ---

def test_constants_at_one_third():
    constants = compute_constants(PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=1.0 / 3.0), 1.0, 1.0)
    assert constants.c_star == pytest.approx(2.0 / 9.0)
    assert constants.c_upper == pytest.approx(7.0 / 9.0)
    assert constants.nu == pytest.approx(1.0 / 6.0)
    assert constants.mu == pytest.approx(2.0 / 3.0)


def test_sandwich_constants_reduce_at_eps0():
    omega = 0.1
    constants = compute_constants(PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=omega), 1.0, 1.0)
    assert lower_sandwich_constant(omega, constants.eps0) == pytest.approx(constants.c_star, rel=1e-12)
    assert upper_sandwich_constant(omega, constants.eps0) == pytest.approx(constants.c_upper, rel=1e-12)


def test_c0_example():
    constants = compute_constants(PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=0.1), 1.0, 1.0)
    first = 0.9 / 12.0
    second = (4.0 * 0.9 ** 3 / (16.0 * 1.3)) ** 2
    third = (0.99 / 2.6) ** 2
    assert first == pytest.approx(0.075)
    assert constants.c0 == pytest.approx(min(first, second, third), rel=1e-12)
    assert constants.c0 == pytest.approx(0.01965, rel=1e-3)


def test_c0_decreases_in_a():
    values = [compute_constants(PhysicsParams(dim=3, a=a, p=4.0, omega_mag=0.1), 1.0, 1.0).c0
              for a in (0.5, 1.0, 2.0, 4.0)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_frequency_condition_gates_eps1():
    mass_critical = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)
    assert not frequency_condition(mass_critical)
    constants = compute_constants(mass_critical, 1.0, 1.0)
    assert constants.eps1 is None and constants.c_omega is None
    supercritical = compute_constants(PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=0.1), 1.0, 1.0)
    low, high = supercritical.eps1_interval
    assert low < supercritical.eps1 < high
    assert supercritical.c_omega == pytest.approx(min(supercritical.c1, supercritical.c2))


@pytest.mark.parametrize("omega, r, gn_const", [(0.0, 1.0, 1.0), (0.2, 0.0, 1.0), (0.2, 1.0, -1.0)])
def test_constants_reject_bad_inputs(omega, r, gn_const):
    with pytest.raises(ValidationError):
        compute_constants(PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=omega), r, gn_const)


def test_window_and_distance_bound():
    params = PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=0.1)
    constants = compute_constants(params, 1.0, 1.0)
    low, high = omega_window(params, constants, constants.c0 / 4)
    assert high == pytest.approx(1.5)
    assert low < high
    assert distance_bound(params, constants, constants.c0 / 8) < distance_bound(params, constants, constants.c0 / 4)


def test_ball_feasibility():
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)
    assert ball_feasible(params, 0.5, 1.0)
    assert not ball_feasible(params, 0.6, 1.0)
    assert ball_feasible(params, 0.6, 1.0, BallNorm.OMEGA1)


# --- dilation ---

def test_kappa_at_zero_is_identity(grid2, random_field):
    u = random_field(grid2)
    assert kappa(u, 0.0) is u


def test_tilde_I_of_ground_state(fine_grid):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0)
    psi0 = create_gaussian(fine_grid, 1.0)
    for theta in (-0.3, 0.0, 0.2):
        expected = math.exp(2 * theta) * 0.5 + math.exp(-2 * theta) * 0.5
        assert tilde_I(psi0, theta, params) == pytest.approx(expected, rel=1e-8)
        assert tilde_I(psi0, theta, params, closed_form=False) == pytest.approx(expected, rel=1e-8)


def test_dilation_slope_is_twice_pohozaev(grid2, params2):
    u = dilate(create_gaussian(grid2, 0.2), 1.2)
    assert tilde_I_slope(u, params2) == pytest.approx(2.0 * pohozaev_Q(u, params2), rel=1e-6)
