import math

import numpy as np
import pytest

from backend.solver_errors import GridError, NonFiniteFieldError, TailLeakError, ZeroMassError
from backend.spectral_core import (WaveField, apply_Lz, boundary_leak, grad_sq_norm, hermite_ground, hermite_state,
                                   make_grid, operators_for, project_l0, rotation_expectation, sigma_dual_norm,
                                   sigma_inner, sigma_sq_norm, spectral_tail, xweighted_sq_norm)
from components.factories.field_factory import create_gaussian, create_vortex


@pytest.fixture
def fine_grid():
    return make_grid(2, 128, 8.0)


# --- grids ---

def test_make_grid_spacing():
    assert make_grid(2, 128, 8.0).spacing == pytest.approx(0.125)
    grid = make_grid(3, 16, 4.0)
    assert grid.spacing == pytest.approx(0.5)
    assert grid.node_count == 4096


@pytest.mark.parametrize("dim, points, half_width", [(2, 100, 8.0), (2, 8, 8.0), (4, 16, 8.0), (2, 64, 0.0)])
def test_make_grid_rejects(dim, points, half_width):
    with pytest.raises(GridError):
        make_grid(dim, points, half_width)


# --- fields ---

def test_wavefield_is_read_only(grid2):
    field = WaveField(grid2, np.zeros(grid2.shape))
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_wavefield_rejects_non_finite(grid2):
    values = np.zeros(grid2.shape, dtype=complex)
    values[3, 3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        WaveField(grid2, values)


def test_normalize_zero_field(grid2):
    with pytest.raises(ZeroMassError):
        WaveField(grid2, np.zeros(grid2.shape)).normalized(1.0)


def test_flat_is_row_major(grid2):
    values = np.arange(grid2.node_count, dtype=float).reshape(grid2.shape)
    assert np.array_equal(WaveField(grid2, values).flat().real, np.arange(grid2.node_count))


# --- norms ---

def test_hermite_ground_norms(fine_grid):
    psi0 = hermite_ground(fine_grid)
    assert psi0.mass() == pytest.approx(1.0, abs=1e-10)
    assert grad_sq_norm(psi0) == pytest.approx(1.0, abs=1e-8)
    assert xweighted_sq_norm(psi0) == pytest.approx(1.0, abs=1e-8)


def test_unnormalized_gaussian_norms(fine_grid):
    phi = WaveField(fine_grid, np.exp(-0.5 * operators_for(fine_grid).r2))
    assert grad_sq_norm(phi) == pytest.approx(math.pi, abs=1e-8)
    assert xweighted_sq_norm(phi) == pytest.approx(math.pi, abs=1e-8)


def test_zero_field_norms(grid2):
    zero = WaveField(grid2, np.zeros(grid2.shape))
    assert grad_sq_norm(zero) == 0.0
    assert xweighted_sq_norm(zero) == 0.0


def test_vortex_gradient_norm(fine_grid):
    assert grad_sq_norm(create_vortex(fine_grid)) == pytest.approx(2.0 * math.pi, rel=1e-8)


def test_scaled_ground_state_trap_norm(fine_grid):
    c = 0.3
    assert xweighted_sq_norm(create_gaussian(fine_grid, c)) == pytest.approx(c, rel=1e-8)


@pytest.mark.parametrize("orders", [(0, 0), (1, 0), (1, 2), (3, 1)])
def test_hermite_states_are_oscillator_eigenfunctions(fine_grid, orders):
    ops = operators_for(fine_grid)
    psi = hermite_state(fine_grid, orders)
    applied = -ops.laplacian(psi.values) + ops.r2 * psi.values
    eigenvalue = fine_grid.dim + 2 * sum(orders)
    assert psi.mass() == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(applied - eigenvalue * psi.values)) < 1e-8


def test_parseval_consistency(grid2, random_field):
    ops = operators_for(grid2)
    for index in range(20):
        u = random_field(grid2, index)
        physical = sum(ops.mass(ops.derivative(u.values, axis)) for axis in range(grid2.dim))
        assert physical == pytest.approx(grad_sq_norm(u), rel=1e-10)


def test_sigma_inner_matches_sigma_norm(grid2, random_field):
    u = random_field(grid2)
    assert sigma_inner(u, u).real == pytest.approx(sigma_sq_norm(u), rel=1e-12)


def test_sigma_dual_norm_of_riesz_image(grid2):
    ops = operators_for(grid2)
    psi0 = hermite_ground(grid2)
    residual = WaveField(grid2, ops.sigma_operator(psi0.values))
    assert sigma_dual_norm(residual) == pytest.approx(math.sqrt(1.0 + grid2.dim), rel=1e-8)


def _band_limited(grid, coords):
    kappa = math.pi / grid.half_width
    x, y = coords
    return np.exp(1j * kappa * 5 * x) + 0.5 * np.cos(kappa * 3 * y) + 0.3j * np.sin(kappa * 20 * x) * np.cos(kappa * y)


@pytest.mark.parametrize("p", [4.0, 6.0, 8.0])
def test_even_p_norm_is_exact_for_band_limited_fields(grid2, p):
    ops = operators_for(grid2)
    coarse = _band_limited(grid2, np.meshgrid(grid2.axis_coordinates(), grid2.axis_coordinates(), indexing="ij"))
    dense_grid = make_grid(2, 512, grid2.half_width)
    dense_axis = dense_grid.axis_coordinates()
    dense = _band_limited(grid2, np.meshgrid(dense_axis, dense_axis, indexing="ij"))
    exact = float(np.sum(np.abs(dense) ** p) * dense_grid.cell_volume)
    assert ops.fine_points(p) > p * 21
    assert ops.p_norm_p(coarse, p, dealiased=True) == pytest.approx(exact, rel=1e-10)


def test_nonlinear_term_is_gradient_of_p_norm(grid2, random_field):
    ops = operators_for(grid2)
    u = random_field(grid2, 0).values * 3.0
    h = random_field(grid2, 1).values
    eps = 1e-6
    numeric = (ops.p_norm_p(u + eps * h, 8.0, True) - ops.p_norm_p(u - eps * h, 8.0, True)) / (2.0 * eps)
    analytic = 8.0 * ops.inner(ops.nonlinear_term(u, 8.0, True), h).real
    assert numeric == pytest.approx(analytic, rel=1e-6)


def test_nonlinear_term_stays_in_filtered_band(grid2, random_field):
    ops = operators_for(grid2)
    term = ops.nonlinear_term(random_field(grid2).values, 8.0, True)
    assert np.max(np.abs(ops.fft(term)[~ops.dealias_mask])) < 1e-10 * np.max(np.abs(ops.fft(term)))


# --- angular momentum ---

def test_lz_annihilates_radial_fields(grid2):
    psi0 = hermite_ground(grid2)
    assert math.sqrt(apply_Lz(psi0).mass()) < 1e-8 * math.sqrt(sigma_sq_norm(psi0))


@pytest.mark.parametrize("charge", [1, -1])
def test_vortex_is_lz_eigenmode(fine_grid, charge):
    vortex = create_vortex(fine_grid, charge)
    difference = apply_Lz(vortex).values - charge * vortex.values
    assert np.linalg.norm(difference) <= 1e-8 * np.linalg.norm(vortex.values)


def test_lz_acts_in_plane_for_3d(grid3):
    ops = operators_for(grid3)
    vortex = WaveField(grid3, (ops.coords[0] + 1j * ops.coords[1]) * np.exp(-0.5 * ops.r2))
    difference = apply_Lz(vortex).values - vortex.values
    assert np.linalg.norm(difference) <= 1e-5 * np.linalg.norm(vortex.values)


def test_rotation_expectation(fine_grid, random_field):
    real_field = WaveField(fine_grid, random_field(fine_grid).values.real)
    assert abs(rotation_expectation(real_field, 0.7)) <= 1e-10 * sigma_sq_norm(real_field)
    assert rotation_expectation(create_vortex(fine_grid), 0.5) == pytest.approx(0.5 * math.pi, rel=1e-8)
    assert rotation_expectation(create_vortex(fine_grid), 0.0) == 0.0


def test_lz_is_self_adjoint(grid2, random_field):
    ops = operators_for(grid2)
    u, v = random_field(grid2, 0).values, random_field(grid2, 1).values
    lhs = ops.inner(u, ops.apply_lz(v))
    rhs = ops.inner(ops.apply_lz(u), v)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


# --- projection ---

def test_project_l0(grid2):
    c = 0.2
    assert project_l0(create_gaussian(grid2, c)) == pytest.approx(math.sqrt(c), rel=1e-10)
    assert project_l0(create_gaussian(grid2, c).scaled(1j)) == pytest.approx(1j * math.sqrt(c), rel=1e-10)
    assert abs(project_l0(create_vortex(grid2))) < 1e-8


# --- dilation and monitors ---

def test_dilation_matches_compressed_gaussian(grid2):
    tau = 1.3
    dilated = operators_for(grid2).dilate(create_gaussian(grid2, 1.0).values, tau)
    assert np.max(np.abs(dilated - create_gaussian(grid2, 1.0, tau).values)) < 1e-9


def test_dilation_out_of_box_raises(grid2):
    with pytest.raises(TailLeakError):
        operators_for(grid2).dilate(create_gaussian(grid2, 1.0).values, 0.2)


def test_monitors_on_resolved_field(grid2):
    psi0 = hermite_ground(grid2)
    assert boundary_leak(psi0) < 1e-12
    assert spectral_tail(psi0) < 1e-12
