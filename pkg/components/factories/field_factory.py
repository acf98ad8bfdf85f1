import itertools
import math
from pathlib import Path
from typing import Callable, Dict, Optional, TypedDict

import numpy as np
from scipy.special import eval_hermite

import components.constants as const
from backend.data_handler import read_snapshot
from backend.solver_errors import ValidationError
from backend.spectral_core import GridSpec, WaveField, operators_for
from components.enums import InitKind, StreamPurpose
from utils.utils import stream_generator


class InitConfig(TypedDict):
    """
    Describes how one initial-state kind is built.

    Every builder receives the grid, the target mass, the run seed and an optional snapshot
    path, and returns a field of exactly that mass.
    """
    description: str
    build_fn: Callable[[GridSpec, float, int, Optional[Path]], WaveField]


def create_gaussian(grid: GridSpec, c: float, tau: float = 1.0) -> WaveField:
    """
    √c·τ^{N/2}ψ₀(τx), the Hermite ground state compressed by τ (τ > 1) or spread (τ < 1).
    Its Σ̇² value is (Nc/2)(τ² + τ⁻²).
    """
    if not (c > 0 and tau > 0):
        raise ValidationError(f"⚠️ Gaussian needs c > 0 and τ > 0, got c={c}, τ={tau}.")
    ops = operators_for(grid)
    values = math.sqrt(c) * tau ** (grid.dim / 2.0) * np.pi ** (-grid.dim / 4.0) * np.exp(-0.5 * tau ** 2 * ops.r2)
    return WaveField(grid, values)


def gaussian_scale_for(dim: int, c: float, sigma_dot: float) -> float:
    """τ ≥ 1 with (Nc/2)(τ² + τ⁻²) = sigma_dot; needs sigma_dot ≥ Nc."""
    q = 2.0 * sigma_dot / (dim * c)
    if q < 2.0:
        raise ValidationError(f"⚠️ No Gaussian of mass {c} has Σ̇² = {sigma_dot} (minimum is {dim * c}).")
    return math.sqrt(0.5 * (q + math.sqrt(q * q - 4.0)))


def create_vortex(grid: GridSpec, charge: int = 1) -> WaveField:
    """(x₁ ± ix₂)e^{−|x|²/2}, the L_z eigenmode with eigenvalue ±1 (not normalized)."""
    if charge not in (1, -1):
        raise ValidationError(f"⚠️ Vortex charge must be ±1, got {charge}.")
    ops = operators_for(grid)
    values = (ops.coords[0] + 1j * charge * ops.coords[1]) * np.exp(-0.5 * ops.r2)
    return WaveField(grid, values)


def create_random_smooth_field(grid: GridSpec, rng: np.random.Generator, max_order: int = 3) -> WaveField:
    """
    Random Gaussian-enveloped field: a complex combination of shifted, rescaled Hermite
    functions of total order ≤ max_order. Width and centre are drawn so the field decays to
    roundoff level well inside the box.
    """
    ops = operators_for(grid)
    width = rng.uniform(0.75, 1.0)
    shift = rng.uniform(-0.25, 0.25, size=grid.dim)
    axis_tables = []
    for axis, coordinate in enumerate(ops.coords):
        scaled = coordinate / width - shift[axis]
        envelope = np.exp(-0.5 * scaled ** 2)
        axis_tables.append([eval_hermite(n, scaled) * envelope / math.sqrt(2.0 ** n * math.factorial(n))
                            for n in range(max_order + 1)])
    values = np.zeros(grid.shape, dtype=np.complex128)
    for orders in itertools.product(range(max_order + 1), repeat=grid.dim):
        if sum(orders) > max_order:
            continue
        coefficient = complex(rng.standard_normal(), rng.standard_normal()) / (1.0 + sum(orders))
        term = np.ones(grid.shape)
        for axis, order in enumerate(orders):
            term = term * axis_tables[axis][order]
        values += coefficient * term
    return WaveField(grid, values)


def create_sigma_perturbation(grid: GridSpec, rng: np.random.Generator, sigma_norm: float) -> WaveField:
    """Random smooth field with ‖δ‖_Σ equal to sigma_norm."""
    field = create_random_smooth_field(grid, rng)
    ops = operators_for(grid)
    current = math.sqrt(ops.sigma_inner(field.values, field.values).real)
    return field.scaled(sigma_norm / current)


def _build_gaussian(grid: GridSpec, c: float, seed: int, path: Optional[Path]) -> WaveField:
    return create_gaussian(grid, c)


def _build_perturbed_gaussian(grid: GridSpec, c: float, seed: int, path: Optional[Path]) -> WaveField:
    base = create_gaussian(grid, c)
    rng = stream_generator(seed, StreamPurpose.INIT.value)
    bump = create_sigma_perturbation(grid, rng, const.PERTURBATION_AMPLITUDE * math.sqrt(c))
    return WaveField(grid, base.values + bump.values).normalized(c)


def _build_vortex_seeded(grid: GridSpec, c: float, seed: int, path: Optional[Path]) -> WaveField:
    ground = create_gaussian(grid, 1.0)
    vortex = create_vortex(grid).normalized(1.0)
    values = ground.values + const.VORTEX_SEED_WEIGHT * vortex.values
    return WaveField(grid, values).normalized(c)


def _build_from_file(grid: GridSpec, c: float, seed: int, path: Optional[Path]) -> WaveField:
    if path is None:
        raise ValidationError("⚠️ init_kind = from_file needs init_path.")
    snapshot = read_snapshot(path)
    if snapshot.field.grid != grid:
        raise ValidationError(f"⚠️ Snapshot grid {snapshot.field.grid} does not match the configured grid {grid}.")
    return snapshot.field.normalized(c)


# Add new initial states here, together with an InitKind member
INIT_CONFIG: Dict[InitKind, InitConfig] = {
    InitKind.GAUSSIAN: InitConfig(
        description="√c ψ₀",
        build_fn=_build_gaussian,
    ),
    InitKind.PERTURBED_GAUSSIAN: InitConfig(
        description="√c ψ₀ plus a seeded smooth perturbation, renormalized",
        build_fn=_build_perturbed_gaussian,
    ),
    InitKind.VORTEX_SEEDED: InitConfig(
        description="ψ₀ mixed with a unit-charge vortex, renormalized",
        build_fn=_build_vortex_seeded,
    ),
    InitKind.FROM_FILE: InitConfig(
        description="RGPE1 snapshot, renormalized",
        build_fn=_build_from_file,
    ),
}


def create_initial_field(kind: InitKind, grid: GridSpec, c: float, seed: int = 0,
                         path: Optional[Path] = None) -> WaveField:
    """Builds the initial iterate of the given kind with mass c."""
    config = INIT_CONFIG[InitKind(kind)]
    return config["build_fn"](grid, c, seed, path)
