import dataclasses

import numpy as np
import pytest

import backend.oracle_cacher as oracle_cacher
from backend.functionals import gn_check
from backend.oracle_cacher import OracleCacher, cached_gn_constant, profile_row
from backend.solver_errors import BracketError, ValidationError
from backend.solvers.oracle import RadialShooter, default_radius, delta_exponent, gn_constant, radialize, solve_Wp
from backend.spectral_core import PhysicsParams, make_grid


@pytest.fixture(scope="module")
def townes():
    return solve_Wp(2, 4.0)


@pytest.fixture(scope="module")
def cubic_3d():
    return solve_Wp(3, 4.0)


def test_delta_exponent():
    assert delta_exponent(2, 4.0) == pytest.approx(0.5)
    assert delta_exponent(3, 4.0) == pytest.approx(0.75)


def test_townes_mass(townes):
    assert townes.l2_sq == pytest.approx(11.7009, rel=1e-3)
    assert townes.decay_ok
    assert townes.residual_max < 1e-6


def test_profile_identities(townes):
    assert townes.pohozaev_defect < 1e-5
    assert townes.nehari_defect < 1e-5


@pytest.mark.parametrize("name", ["townes", "cubic_3d"])
def test_profile_is_positive_and_decreasing(request, name):
    profile = request.getfixturevalue(name)
    assert np.all(profile.values > 0.0)
    assert np.all(np.diff(profile.values) <= 0.0)
    assert profile.decay_ok
    assert profile.radii[-1] == pytest.approx(default_radius(profile.dim, profile.p))


def test_gn_constant_formula(townes, cubic_3d):
    for profile in (townes, cubic_3d):
        value = gn_constant(profile)
        inverted = value ** profile.p * 2.0 * profile.l2_sq ** ((profile.p - 2.0) / 2.0)
        assert inverted == pytest.approx(profile.p, rel=1e-12)


def test_gn_constant_needs_decayed_profile(townes):
    with pytest.raises(ValidationError):
        gn_constant(dataclasses.replace(townes, decay_ok=False))


def test_radialized_profile_is_extremal(townes):
    grid = make_grid(2, 256, 16.0)
    params = PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.0)
    lhs, rhs, _ = gn_check(radialize(townes, grid), params, gn_constant(townes))
    assert lhs / rhs == pytest.approx(1.0, abs=1e-3)


def test_radialize_checks_dimension(townes, grid3):
    with pytest.raises(ValidationError):
        radialize(townes, grid3)


@pytest.mark.parametrize("dim, p, radius, n_points", [
    (4, 3.0, 30.0, 4096),
    (2, 2.0, 30.0, 4096),
    (3, 6.0, 30.0, 4096),
    (2, 4.0, 10.0, 4096),
    (2, 4.0, 30.0, 1024),
])
def test_solve_rejects_bad_arguments(dim, p, radius, n_points):
    with pytest.raises(ValidationError):
        solve_Wp(dim, p, radius, n_points)


def test_bad_shot_refines_the_bracket(townes, monkeypatch):
    calls = []
    original = RadialShooter.bisect

    def first_call_lands_low(self, low, high):
        calls.append((low, high))
        value = original(self, low, high)
        return 0.7 * value if len(calls) == 1 else value

    monkeypatch.setattr(RadialShooter, "bisect", first_call_lands_low)
    profile = solve_Wp(2, 4.0)
    assert len(calls) == 2
    assert calls[0][0] < calls[1][0] < calls[1][1] < calls[0][1]
    assert profile.shoot_value == pytest.approx(townes.shoot_value, rel=1e-6)
    assert profile.l2_sq == pytest.approx(townes.l2_sq, rel=1e-6)


def test_bracket_refinement_needs_an_overshoot():
    shooter = RadialShooter(2, 4.0, default_radius(2, 4.0))
    with pytest.raises(BracketError):
        shooter.refine_bracket(1e-3, 1e-2)


@pytest.mark.slow
def test_refined_grid_agrees(townes):
    refined = solve_Wp(2, 4.0, n_points=8192)
    assert refined.l2_sq == pytest.approx(townes.l2_sq, rel=1e-4)


@pytest.mark.slow
def test_constant_varies_continuously_in_p():
    values = [gn_constant(solve_Wp(3, p)) for p in (3.5, 4.0, 4.5)]
    assert all(abs(later / earlier - 1.0) < 0.2 for earlier, later in zip(values, values[1:]))


def test_cache_round_trip(tmp_path, townes, monkeypatch):
    cacher = OracleCacher(tmp_path)
    assert cacher.lookup(2, 4.0, float(townes.radii[-1]), len(townes.radii)) is None
    monkeypatch.setattr(oracle_cacher, "solve_Wp", lambda *args: townes)
    row = cached_gn_constant(2, 4.0, cacher=cacher)
    assert cacher.cache_exists()
    assert row["gn_const"] == pytest.approx(gn_constant(townes))

    def no_solve(*args):
        raise AssertionError("cache miss")

    monkeypatch.setattr(oracle_cacher, "solve_Wp", no_solve)
    cached = cached_gn_constant(2, 4.0, cacher=cacher)
    assert cached["W_l2_sq"] == pytest.approx(townes.l2_sq)
    assert int(cached["N"]) == 2


def test_cache_keeps_one_row_per_key(tmp_path, townes):
    cacher = OracleCacher(tmp_path)
    row = profile_row(townes)
    assert cacher.store(row)
    assert cacher.store(row)
    assert len(cacher.load_table()) == 1


def test_broken_cache_file_is_ignored(tmp_path):
    cacher = OracleCacher(tmp_path)
    cacher.cache_file.write_bytes(b"not parquet")
    assert cacher.load_table().empty
    assert cacher.lookup(2, 4.0, 26.0, 4096) is None
