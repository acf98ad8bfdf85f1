"""
Parser for the plain key=value run configuration.

    [grid]
    N = 2
    M = 128
    L = 8
    [physics]
    a = 1
    p = 4
    omega = 0.1
    [constraint]
    c = 0.01
    r = 1

Blank lines and lines starting with '#' or ';' are ignored. Every error names the line it comes
from; bound violations found while building the typed objects are traced back to the key whose
name the violated rule mentions.
"""
import re
from pathlib import Path
from typing import Any, Callable, Optional

import components.constants as const
from backend.solver_errors import ConfigError, ValidationError
from backend.solver_models import DynamicsConfig, OracleConfig, RunConfig, SaddleOptions, SolverConfig
from backend.spectral_core import GridSpec, PhysicsParams
from components.enums import BallNorm, InitKind

REQUIRED = object()


def _integer(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def _enum_parser(enum_type) -> Callable[[str], Any]:
    def parse(text: str):
        return enum_type(text.strip().lower())

    return parse


def _path(text: str) -> Optional[Path]:
    return Path(text) if text else None


# Add new keys here: section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "grid": {
        "dim": (_integer, REQUIRED),
        "points_per_axis": (_integer, None),
        "half_width": (float, None),
    },
    "physics": {
        "a": (float, REQUIRED),
        "p": (float, REQUIRED),
        "omega_mag": (float, REQUIRED),
    },
    "constraint": {
        "c": (float, REQUIRED),
        "r": (float, REQUIRED),
        "ball_norm": (_enum_parser(BallNorm), BallNorm.SIGMA_DOT),
    },
    "solver": {
        "dt_imag": (float, const.SOLVER_DEFAULTS["dt_imag"]),
        "tol_grad": (float, const.SOLVER_DEFAULTS["tol_grad"]),
        "max_iters": (_integer, const.SOLVER_DEFAULTS["max_iters"]),
        "init_kind": (_enum_parser(InitKind), InitKind(const.SOLVER_DEFAULTS["init_kind"])),
        "init_path": (_path, None),
        "workers": (_integer, const.SOLVER_DEFAULTS["workers"]),
    },
    "dynamics": {
        "T": (float, const.DYNAMICS_DEFAULTS["T"]),
        "dt": (float, const.DYNAMICS_DEFAULTS["dt"]),
        "sample_every": (float, const.DYNAMICS_DEFAULTS["sample_every"]),
        "snapshot_every": (_integer, const.DYNAMICS_DEFAULTS["snapshot_every"]),
        "perturbation_scale": (float, const.STABILITY_DEFAULTS["perturbation_scale"]),
        "n_trials": (_integer, const.STABILITY_DEFAULTS["n_trials"]),
    },
    "saddle": {key: (_integer if isinstance(value, int) else float, value)
               for key, value in const.SADDLE_DEFAULTS.items()},
    "oracle": {
        "radius": (float, const.ORACLE_DEFAULTS["radius"]),
        "n_points": (_integer, const.ORACLE_DEFAULTS["n_points"]),
    },
    "run": {
        "seed": (_integer, 0),
        "output_dir": (Path, const.DEFAULT_OUTPUT_DIRECTORY),
    },
}

ALIASES = {"N": "dim", "M": "points_per_axis", "L": "half_width", "omega": "omega_mag"}

TYPE_NAMES = {float: "a real number", _integer: "an integer"}

SECTION_PATTERN = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")


def _tokenize(text: str) -> tuple[dict[str, dict[str, str]], dict[tuple[str, str], int]]:
    """Splits the text into raw section values and remembers the line of every key."""
    raw: dict[str, dict[str, str]] = {}
    lines: dict[tuple[str, str], int] = {}
    section: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        header = SECTION_PATTERN.match(stripped)
        if header:
            section = header.group(1).lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=number)
            raw.setdefault(section, {})
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got '{stripped}'", line=number)
        if section is None:
            raise ConfigError("key outside of any section", line=number)
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", line=number, key=key)
        if key in raw[section]:
            raise ConfigError(f"duplicate key '{key}' (first set on line {lines[(section, key)]})", line=number,
                              key=key)
        raw[section][key] = value
        lines[(section, key)] = number
    return raw, lines


def _convert(raw: dict[str, dict[str, str]], lines: dict[tuple[str, str], int]) -> dict[str, dict[str, Any]]:
    values: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parser, default) in keys.items():
            if key in raw.get(section, {}):
                text = raw[section][key]
                try:
                    values[section][key] = parser(text)
                except ValueError:
                    raise ConfigError(f"'{key}' expects {TYPE_NAMES.get(parser, 'one of its allowed values')}, got "
                                      f"'{text}'", line=lines[(section, key)], key=key) from None
            elif default is REQUIRED:
                raise ConfigError(f"missing required key '{key}' in [{section}]", key=key)
            else:
                values[section][key] = default
    return values


def _build(sections: tuple[str, ...], factory: Callable[[], Any], lines: dict[tuple[str, str], int]):
    """Runs a constructor and maps its validation failure onto the line of the key it names."""
    try:
        return factory()
    except ConfigError:
        raise
    except ValidationError as error:
        message = str(error).replace("⚠️", "").strip()
        for section in sections:
            for key in SCHEMA[section]:
                if re.search(rf"\b{re.escape(key)}\b", message):
                    raise ConfigError(message, line=lines.get((section, key)), key=key) from None
        raise ConfigError(message) from None


def parse_config(text: str) -> RunConfig:
    """
    Parses and validates a configuration text.

    Defaults fill omitted optional keys (grid size and width per dimension); the complete set
    of values lands in `RunConfig.echo` for the run manifest.

    Raises:
        ConfigError: on unknown sections or keys, duplicates, type mismatches, missing
            required keys and bound violations, with the line number when one applies.
    """
    raw, lines = _tokenize(text)
    values = _convert(raw, lines)
    grid_values, physics_values, constraint = values["grid"], values["physics"], values["constraint"]

    if grid_values["dim"] not in const.GRID_DEFAULTS:
        raise ConfigError(f"dim must be 2 or 3, got {grid_values['dim']}", line=lines.get(("grid", "dim")),
                          key="dim")
    for key, default in const.GRID_DEFAULTS[grid_values["dim"]].items():
        if grid_values[key] is None:
            grid_values[key] = default

    grid = _build(("grid",), lambda: GridSpec(**grid_values), lines)
    physics = _build(("physics",), lambda: PhysicsParams(dim=grid.dim, **physics_values), lines)

    c, r = constraint["c"], constraint["r"]
    smallest = grid.dim * c if constraint["ball_norm"] is BallNorm.SIGMA_DOT else 0.5 * grid.dim * c
    if c > 0 and r > 0 and smallest > r * (1.0 + 1e-12):
        if constraint["ball_norm"] is BallNorm.SIGMA_DOT:
            bound, limit = "r/N", r / grid.dim
        else:
            bound, limit = "2r/N", 2.0 * r / grid.dim
        raise ConfigError(f"c > {bound}: S(c)∩B(r) is empty (requires c ≤ {bound} = {limit:.6g})",
                          line=lines.get(("constraint", "c")), key="c")

    seed = values["run"]["seed"]
    solver = _build(("constraint", "solver"),
                    lambda: SolverConfig(c=c, r=r, seed=seed, ball_norm=constraint["ball_norm"], **values["solver"]),
                    lines)
    dynamics = _build(("dynamics",), lambda: DynamicsConfig(**values["dynamics"]), lines)
    saddle = _build(("saddle",), lambda: SaddleOptions(workers=solver.workers, **values["saddle"]), lines)
    oracle = _build(("oracle",), lambda: OracleConfig(**values["oracle"]), lines)

    return RunConfig(grid=grid, physics=physics, solver=solver, dynamics=dynamics, saddle=saddle, oracle=oracle,
                     seed=seed, output_dir=values["run"]["output_dir"], echo=values)


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as error:
        raise ConfigError(f"cannot read config file {path}: {error}") from None
    return parse_config(text)
