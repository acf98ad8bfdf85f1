from pathlib import Path

import pytest

import components.constants as const
from backend.config_parser import load_config, parse_config
from backend.solver_errors import ConfigError, ValidationError
from components.enums import BallNorm, InitKind

MINIMAL = """
# minimal run
[grid]
N = 2
[physics]
a = 1
p = 4
omega = 0.1
[constraint]
c = 0.01
r = 1
"""


def with_line(text: str, section: str, line: str) -> str:
    return text.replace(f"[{section}]\n", f"[{section}]\n{line}\n", 1)


def test_minimal_config_fills_defaults():
    config = parse_config(MINIMAL)
    assert config.grid.dim == 2
    assert config.grid.points_per_axis == const.GRID_DEFAULTS[2]["points_per_axis"]
    assert config.grid.half_width == const.GRID_DEFAULTS[2]["half_width"]
    assert config.physics.omega_mag == pytest.approx(0.1)
    assert config.c == pytest.approx(0.01)
    assert config.solver.init_kind is InitKind.GAUSSIAN
    assert config.solver.ball_norm is BallNorm.SIGMA_DOT
    assert config.seed == 0
    assert config.echo["grid"]["points_per_axis"] == 128
    assert config.echo["saddle"]["n_nodes"] == const.SADDLE_DEFAULTS["n_nodes"]


def test_three_dimensional_defaults():
    config = parse_config(MINIMAL.replace("N = 2", "N = 3"))
    assert config.grid.points_per_axis == 64
    assert config.grid.half_width == pytest.approx(6.0)


def test_optional_sections():
    text = MINIMAL + "[solver]\ninit_kind = Vortex_Seeded\nworkers = 4\n[run]\nseed = 11\n[oracle]\nradius = 30\n"
    config = parse_config(text)
    assert config.solver.init_kind is InitKind.VORTEX_SEEDED
    assert config.solver.workers == 4
    assert config.saddle.workers == 4
    assert config.seed == 11
    assert config.solver.seed == 11
    assert config.oracle.radius == pytest.approx(30.0)


def test_omega_out_of_range():
    with pytest.raises(ConfigError, match=r"omega_mag must lie in \[0,1\)") as info:
        parse_config(MINIMAL.replace("omega = 0.1", "omega = 1.2"))
    assert info.value.line == 8


def test_empty_constraint_set():
    with pytest.raises(ConfigError, match="c ≤ r/N") as info:
        parse_config(MINIMAL.replace("c = 0.01", "c = 0.6"))
    assert info.value.line == 10
    assert info.value.key == "c"


def test_omega1_ball_widens_feasibility():
    config = parse_config(with_line(MINIMAL.replace("c = 0.01", "c = 0.6"), "constraint", "ball_norm = omega1"))
    assert config.solver.ball_norm is BallNorm.OMEGA1


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError, match="first set on line 6") as info:
        parse_config(with_line(MINIMAL, "physics", "a = 2"))
    assert info.value.line == 7


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key 'beta'") as info:
        parse_config(with_line(MINIMAL, "physics", "beta = 2"))
    assert info.value.line == 6


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(MINIMAL + "[plots]\n")


@pytest.mark.parametrize("replacement, message", [
    (("p = 4", "p = four"), "'p' expects a real number"),
    (("N = 2", "N = 2.5"), "'dim' expects an integer"),
    (("r = 1", ""), "missing required key 'r'"),
    (("N = 2", "N = 4"), "dim must be 2 or 3"),
    (("p = 4", "p = 3"), "p must satisfy"),
])
def test_rejections(replacement, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(MINIMAL.replace(*replacement))


def test_missing_equals_sign():
    with pytest.raises(ConfigError, match="expected 'key = value'") as info:
        parse_config(MINIMAL.replace("a = 1", "a 1"))
    assert info.value.line == 6


def test_key_before_section():
    with pytest.raises(ConfigError, match="outside of any section"):
        parse_config("N = 2\n" + MINIMAL)


def test_config_errors_are_validation_errors():
    assert issubclass(ConfigError, ValidationError)


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_config(path).physics.p == pytest.approx(4.0)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")
    assert isinstance(parse_config(MINIMAL).output_dir, Path)
