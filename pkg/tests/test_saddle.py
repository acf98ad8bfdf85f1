import math

import numpy as np
import pytest

from backend.functionals import energy, tilde_I
from backend.solver_errors import ValidationError
from backend.solver_models import MountainPath, SaddleOptions, SolverConfig
from backend.solvers.groundstate import minimize_local
from backend.solvers.saddle import baseline_path, endpoint_v_c, estimate_gamma, refine_saddle
from backend.spectral_core import PhysicsParams, make_grid
from components.factories.field_factory import create_gaussian


@pytest.fixture
def septic():
    """N=2, p=8 (pδ_p = 6), on a grid that resolves four-fold compression."""
    grid = make_grid(2, 128, 6.0)
    return grid, PhysicsParams(dim=2, a=1.0, p=8.0, omega_mag=0.1)


@pytest.fixture
def endpoint(septic):
    grid, params = septic
    u_c = create_gaussian(grid, 2.0)
    v_c, scale = endpoint_v_c(u_c, params, 4.0)
    return u_c, v_c, scale


def test_endpoint_has_negative_energy(septic, endpoint):
    _, params = septic
    u_c, v_c, scale = endpoint
    parts = energy(v_c, params)
    assert scale == 4.0
    assert parts.total < 0.0
    assert parts.sigma_dot > 4.0
    assert v_c.mass() == pytest.approx(u_c.mass(), rel=1e-8)


def test_endpoint_energy_matches_closed_form(septic, endpoint):
    _, params = septic
    u_c, v_c, scale = endpoint
    assert tilde_I(u_c, math.log(scale), params) == pytest.approx(energy(v_c, params).total, rel=1e-6)


def test_baseline_path(septic, endpoint):
    _, params = septic
    u_c, v_c, scale = endpoint
    path = baseline_path(u_c, scale, 17, params)
    assert path.nodes[0] is u_c
    assert np.array_equal(path.nodes[-1].values, v_c.values)
    assert all(node.mass() == pytest.approx(2.0, rel=1e-8) for node in path.nodes)
    assert path.max_energy > max(path.energies[0], path.energies[-1])
    assert 0 < path.max_index < 16
    assert path.to_array().shape == (17, 2)


def test_baseline_path_needs_nodes(septic, endpoint):
    _, params = septic
    u_c, _, scale = endpoint
    with pytest.raises(ValidationError):
        baseline_path(u_c, scale, 16, params)


@pytest.mark.parametrize("params", [
    PhysicsParams(dim=2, a=0.0, p=8.0, omega_mag=0.1),
    PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1),
])
def test_mountain_pass_needs_focusing_supercritical_problem(septic, params):
    grid, _ = septic
    u_c = create_gaussian(grid, 2.0)
    with pytest.raises(ValidationError):
        endpoint_v_c(u_c, params, 4.0)
    with pytest.raises(ValidationError):
        estimate_gamma(u_c, u_c, params)


def test_relaxation_never_raises_the_estimate(septic, endpoint):
    _, params = septic
    u_c, v_c, scale = endpoint
    baseline = baseline_path(u_c, scale, 17, params)
    gamma_c, relaxed = estimate_gamma(u_c, v_c, params, SaddleOptions(n_nodes=17, max_sweeps=40), baseline)
    assert gamma_c <= baseline.max_energy
    assert gamma_c == pytest.approx(relaxed.max_energy)
    assert len(relaxed.nodes) == 17
    assert np.array_equal(relaxed.nodes[0].values, u_c.values)
    assert all(node.mass() == pytest.approx(2.0, rel=1e-8) for node in relaxed.nodes)


def test_relaxation_defaults_to_dilation_baseline(septic, endpoint):
    _, params = septic
    u_c, v_c, scale = endpoint
    baseline = baseline_path(u_c, scale, 17, params)
    gamma_c, relaxed = estimate_gamma(u_c, v_c, params, SaddleOptions(n_nodes=17, max_sweeps=5))
    assert relaxed.endpoint_scale == pytest.approx(scale, rel=1e-6)
    assert np.array_equal(relaxed.nodes[-1].values, v_c.values)
    assert gamma_c <= baseline.max_energy + 1e-8 * abs(baseline.max_energy)


def test_refinement_needs_interior_peak(septic):
    grid, params = septic
    u = create_gaussian(grid, 1.0)
    path = MountainPath(params=np.linspace(0.0, 1.0, 3), nodes=[u, u, u], energies=np.array([0.0, 1.0, 2.0]),
                        endpoint_scale=2.0)
    with pytest.raises(ValidationError, match="endpoint"):
        refine_saddle(path, params)


@pytest.mark.slow
def test_mountain_pass_pipeline():
    grid = make_grid(2, 256, 6.0)
    params = PhysicsParams(dim=2, a=1.0, p=8.0, omega_mag=0.1)
    minimizer = minimize_local(params, SolverConfig(c=0.45, r=1.0), grid)
    assert minimizer.converged
    u_c = minimizer.field
    v_c, scale = endpoint_v_c(u_c, params, 1.0)
    opts = SaddleOptions(n_nodes=17)
    baseline = baseline_path(u_c, scale, opts.n_nodes, params)
    gamma_c, relaxed = estimate_gamma(u_c, v_c, params, opts, baseline)
    assert minimizer.energy.total < gamma_c <= baseline.max_energy

    report = refine_saddle(relaxed, params, opts)
    assert report.m_c_r == pytest.approx(minimizer.energy.total)
    assert report.gamma_c == gamma_c
    assert report.saddle_energy > report.m_c_r
    assert report.margin > 0
    assert len(report.q_history) == report.newton_iters + 1
    assert report.to_dict()["gamma_label"] == "upper estimate"
    assert report.accepted
    assert abs(report.saddle_Q) <= 1e-4 * report.saddle_sigma_dot
    assert report.saddle_grad_residual <= 1e-5
    assert report.dilation_slope == pytest.approx(2.0 * report.saddle_Q, abs=1e-4)
