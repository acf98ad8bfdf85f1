import math

import numpy as np
import pytest

from backend.functionals import compute_constants
from backend.solver_errors import ValidationError
from backend.solver_models import SolverConfig
from backend.solvers.dynamics import dist_sigma_mod_phase, evolve, stability_experiment, strang_step
from backend.solvers.groundstate import minimize_local
from backend.solvers.oracle import gn_constant, solve_Wp
from backend.spectral_core import PhysicsParams, WaveField, hermite_state, make_grid, sigma_sq_norm
from components.enums import BlowupReason
from components.factories.field_factory import create_gaussian


@pytest.fixture
def small_grid():
    return make_grid(2, 32, 6.0)


def sigma_distance(u: WaveField, v: WaveField) -> float:
    return math.sqrt(sigma_sq_norm(WaveField(u.grid, u.values - v.values)))


def test_oscillator_ground_state_only_turns_its_phase(grid2):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0)
    c, T = 0.1, 1.0
    u0 = create_gaussian(grid2, c)
    stats = evolve(u0, T, 1e-3, params)
    expected = u0.scaled(np.exp(-1j * grid2.dim * T / 2.0))
    assert sigma_distance(stats.final_field, expected) <= 1e-6 * math.sqrt(c)
    assert not stats.blowup_flag


def test_one_step_keeps_mass(grid2, params2, random_field):
    u = random_field(grid2).scaled(0.3)
    assert strang_step(u, 1e-2, params2).mass() == pytest.approx(u.mass(), rel=1e-12)


def test_backward_step_inverts_forward_step(grid2, params2, random_field):
    u = random_field(grid2).scaled(0.3)
    back = strang_step(strang_step(u, 1e-2, params2), -1e-2, params2)
    assert np.max(np.abs(back.values - u.values)) < 1e-12


def test_rotation_substep_is_bounded(grid2, params2, random_field):
    with pytest.raises(ValidationError, match="reduce dt"):
        strang_step(random_field(grid2), 1.0, PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.5))


def test_rotation_without_interaction_turns_vortex_phase(grid2):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.4)
    vortex = hermite_state(grid2, (1, 0)).values + 1j * hermite_state(grid2, (0, 1)).values
    u0 = WaveField(grid2, vortex / math.sqrt(2.0))
    T = 0.5
    stats = evolve(u0, T, 1e-3, params)
    # H = ½(−Δ + |x|²) − |Ω|L_z has eigenvalue 2 − |Ω| on the charge-one vortex
    expected = u0.scaled(np.exp(-1j * (2.0 - 0.4) * T))
    assert sigma_distance(stats.final_field, expected) <= 1e-6


def test_time_reversal(grid2, random_field):
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)
    u0 = random_field(grid2).normalized(0.5)
    forward = evolve(u0, 0.5, 1e-2, params).final_field
    back = evolve(forward, 0.5, -1e-2, params).final_field
    assert math.sqrt(sigma_sq_norm(WaveField(grid2, back.values - u0.values))) <= 1e-6


def test_second_order_convergence(grid2, random_field):
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)
    u0 = random_field(grid2).normalized(0.5)
    T = 0.5
    reference = evolve(u0, T, 0.02 / 8, params).final_field
    coarse = sigma_distance(evolve(u0, T, 0.02, params).final_field, reference)
    fine = sigma_distance(evolve(u0, T, 0.01, params).final_field, reference)
    assert 3.0 <= coarse / fine <= 5.0


def test_standing_wave_conservation(small_grid):
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)
    minimizer = minimize_local(params, SolverConfig(c=0.01, r=1.0), small_grid)
    stats = evolve(minimizer.field, 2.0, 1e-3, params, reference=minimizer.field)
    summary = stats.summary()
    assert summary["mass_drift"] <= 1e-10
    assert summary["energy_drift"] <= 1e-8
    assert summary["lz_drift"] <= 1e-8
    assert summary["max_dist"] <= 1e-5
    assert np.all(np.diff(stats.times) > 0)
    assert list(stats.to_frame().columns) == ["t", "mass", "energy", "grad_norm", "dist"]


def test_sampling_lands_on_horizon(grid2, random_field):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0)
    stats = evolve(random_field(grid2), 0.35, 0.03, params, sample_every=0.1)
    assert stats.times[0] == 0.0
    assert stats.times[-1] == pytest.approx(0.35)
    assert stats.dist_series is None


def test_snapshots_are_emitted(grid2, random_field):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0)
    emitted = []
    evolve(random_field(grid2), 1.0, 0.01, params, sample_every=0.1, snapshot_every=3,
           on_snapshot=lambda index, elapsed, field: emitted.append(index))
    assert emitted == [3, 6, 9]


@pytest.mark.parametrize("T, dt", [(0.0, 0.01), (-1.0, 0.01), (1.0, 0.0)])
def test_evolve_rejects_bad_horizon(small_grid, random_field, T, dt):
    with pytest.raises(ValidationError):
        evolve(random_field(small_grid), T, dt, PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.0))


def test_supercritical_collapse_is_flagged(grid3):
    params = PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=0.0)
    stats = evolve(create_gaussian(grid3, 30.0, 1.4), 2.0, 1e-3, params)
    assert stats.blowup_flag
    assert stats.blowup_reason in (BlowupReason.GRADIENT, BlowupReason.TAIL_LEAK, BlowupReason.NON_FINITE)
    assert stats.blowup_time < 2.0


# --- distance modulo phase ---

def test_distance_ignores_global_phase(grid2, random_field):
    u = random_field(grid2)
    assert dist_sigma_mod_phase(u, u.scaled(np.exp(1j * math.pi / 3))) <= 1e-12 * math.sqrt(sigma_sq_norm(u))


def test_distance_to_zero(grid2, random_field):
    u = random_field(grid2)
    zero = WaveField(grid2, np.zeros(grid2.shape))
    assert dist_sigma_mod_phase(u, zero) == pytest.approx(math.sqrt(sigma_sq_norm(u)), rel=1e-12)


def test_distance_between_hermite_states():
    grid = make_grid(2, 128, 8.0)
    c = 0.3
    ground = hermite_state(grid, (0, 0)).scaled(math.sqrt(c))
    excited = hermite_state(grid, (1, 0)).scaled(math.sqrt(c))
    # ‖ψ_k‖_Σ² = 1 + λ_k with λ₀ = N, λ₁ = N + 2, and the two are Σ-orthogonal
    assert dist_sigma_mod_phase(ground, excited) == pytest.approx(math.sqrt(c * (2.0 + 2.0 + 4.0)), rel=1e-8)


def test_distance_needs_common_grid(grid2, grid3, random_field):
    with pytest.raises(ValidationError):
        dist_sigma_mod_phase(random_field(grid2), random_field(grid3))


# --- stability ---

@pytest.fixture
def linear_minimizer(small_grid):
    params = PhysicsParams(dim=2, a=0.0, p=4.0, omega_mag=0.2)
    return params, minimize_local(params, SolverConfig(c=0.05, r=1.0), small_grid)


def test_linear_control_does_not_amplify(linear_minimizer):
    params, minimizer = linear_minimizer
    summary = stability_experiment(params, minimizer, 1e-2, 2, 1.0, dt=1e-3, seed=5, workers=2)
    assert summary.blowups == 0
    assert not summary.contradiction
    assert 1.0 <= summary.amplification <= 1.0 + 1e-4
    assert len(summary.to_frame()) == 2


def test_stability_trials_are_seeded(linear_minimizer):
    params, minimizer = linear_minimizer
    first = stability_experiment(params, minimizer, 1e-2, 2, 0.2, dt=1e-3, seed=5)
    second = stability_experiment(params, minimizer, 1e-2, 2, 0.2, dt=1e-3, seed=5, workers=2)
    assert first.initial_distances == second.initial_distances
    assert first.trial_amplifications == second.trial_amplifications


@pytest.mark.parametrize("scale, trials", [(0.0, 2), (0.2, 2), (1e-2, 0)])
def test_stability_rejects_bad_knobs(linear_minimizer, scale, trials):
    params, minimizer = linear_minimizer
    with pytest.raises(ValidationError):
        stability_experiment(params, minimizer, scale, trials, 1.0)


@pytest.mark.slow
def test_focusing_minimizer_stays_close_under_perturbation(grid3, params3):
    constants = compute_constants(params3, 1.0, gn_constant(solve_Wp(3, 4.0)))
    minimizer = minimize_local(params3, SolverConfig(c=constants.c0 / 4.0, r=1.0), grid3, constants)
    assert minimizer.converged
    summary = stability_experiment(params3, minimizer, 1e-2, 8, 4.0 * math.pi, dt=1e-2, seed=3, workers=4)
    assert summary.blowups == 0
    assert summary.amplification <= 5.0
    assert len(summary.trial_amplifications) == 8
