"""
Property suites run by the `check` command.

Each suite draws seeded random fields from the `check` stream, evaluates one inequality or
discrete identity per field and condenses the outcome into a single table row. Rows that test an
equality case (the Gaussian for Weinstein, W_p for Gagliardo–Nirenberg) are reported separately.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

import components.constants as const
import utils.logger as logger
from backend.functionals import (compute_constants, gn_check, lower_sandwich_constant, norm_omega1, norm_omega2,
                                 rotation_interpolation_check, upper_sandwich_constant, weinstein_check)
from backend.solver_models import RadialProfile
from backend.solvers.oracle import radialize
from backend.spectral_core import GridSpec, PhysicsParams, WaveField, operators_for
from components.enums import StreamPurpose
from components.factories.field_factory import create_gaussian, create_random_smooth_field
from utils.benchmark import Benchmark
from utils.utils import stream_generator

FieldCheck = Callable[[WaveField], tuple[float, bool]]


@dataclass
class SuiteResult:
    suite: str
    fields: int
    failures: int
    worst: float
    passed: bool
    note: str = ""


def _random_field(grid: GridSpec, seed: int, index: int) -> WaveField:
    return create_random_smooth_field(grid, stream_generator(seed, StreamPurpose.CHECK.value, index))


def _run_suite(name: str, check: FieldCheck, grid: GridSpec, n_fields: int, seed: int, workers: int,
               note: str = "") -> SuiteResult:
    """`check` returns (ratio, ok) with ratio = lhs/rhs of the inequality it tests."""
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        outcomes = list(executor.map(lambda index: check(_random_field(grid, seed, index)), range(n_fields)))
    failures = sum(not ok for _, ok in outcomes)
    worst = max(ratio for ratio, _ in outcomes)
    return SuiteResult(name, n_fields, failures, worst, failures == 0, note)


# ======================================================= SUITES =======================================================

def weinstein_suite(grid: GridSpec, n_fields: int, seed: int, workers: int = 1) -> list[SuiteResult]:
    def check(u: WaveField) -> tuple[float, bool]:
        lhs, rhs, ok = weinstein_check(u)
        return lhs / rhs, ok

    rows = [_run_suite("weinstein", check, grid, n_fields, seed, workers)]
    lhs, rhs, _ = weinstein_check(create_gaussian(grid, 1.0))
    ratio = lhs / rhs
    equal = abs(ratio - 1.0) <= const.IDENTITY_TOLERANCE
    rows.append(SuiteResult("weinstein_gaussian_equality", 1, int(not equal), ratio, equal, "ratio 1 expected"))
    return rows


def gn_suite(grid: GridSpec, params: PhysicsParams, gn_const: float, n_fields: int, seed: int, workers: int = 1,
             profile: Optional[RadialProfile] = None) -> list[SuiteResult]:
    def check(u: WaveField) -> tuple[float, bool]:
        lhs, rhs, ok = gn_check(u, params, gn_const)
        return lhs / rhs, ok

    rows = [_run_suite("gagliardo_nirenberg", check, grid, n_fields, seed, workers)]
    if profile is not None:
        # squeeze W until its 10⁻⁴ level sits inside the box; GN is dilation invariant
        scale = max(1.0, profile.match_radius / (0.9 * grid.half_width))
        lhs, rhs, _ = gn_check(radialize(profile, grid, scale), params, gn_const)
        ratio = lhs / rhs
        ok = abs(ratio - 1.0) <= const.EXTREMIZER_TOLERANCE
        rows.append(SuiteResult("gagliardo_nirenberg_extremizer", 1, int(not ok), ratio, ok,
                                f"W_p sampled at scale {scale:.3g}"))
    return rows


def rotation_chain_suite(grid: GridSpec, omega_mag: float, n_fields: int, seed: int,
                         workers: int = 1) -> list[SuiteResult]:
    eps = omega_mag * (3.0 + omega_mag) / (1.0 + 3.0 * omega_mag) if omega_mag else 1.0

    def check(u: WaveField) -> tuple[float, bool]:
        lhs, mid, rhs, ok = rotation_interpolation_check(u, omega_mag, eps)
        return (mid / rhs if rhs > 0 else 0.0), ok

    return [_run_suite("rotation_interpolation", check, grid, n_fields, seed, workers, f"ε = {eps:.6g}")]


def omega1_sandwich_suite(grid: GridSpec, omega_mag: float, n_fields: int, seed: int,
                          workers: int = 1) -> list[SuiteResult]:
    """C_*(Ω)‖u‖_Σ̇² ≤ ‖u‖_{Ω1}² ≤ C^*(Ω)‖u‖_Σ̇², at ε = ε₀ (both constants are ½ without rotation)."""
    if omega_mag:
        eps0 = omega_mag * (3.0 + omega_mag) / (1.0 + 3.0 * omega_mag)
        lower, upper = lower_sandwich_constant(omega_mag, eps0), upper_sandwich_constant(omega_mag, eps0)
    else:
        lower = upper = 0.5
    ops = operators_for(grid)

    def check(u: WaveField) -> tuple[float, bool]:
        sigma_dot = ops.grad_sq(u.values) + ops.xweighted_sq(u.values)
        value = norm_omega1(u, omega_mag)
        slack = const.CHECK_SLACK * sigma_dot
        ok = lower * sigma_dot - slack <= value <= upper * sigma_dot + slack
        return value / (upper * sigma_dot), ok

    return [_run_suite("omega1_sandwich", check, grid, n_fields, seed, workers,
                       f"C_* = {lower:.6g}, C^* = {upper:.6g}")]


def omega2_sandwich_suite(grid: GridSpec, params: PhysicsParams, n_fields: int, seed: int,
                          workers: int = 1) -> list[SuiteResult]:
    """𝒞_Ω‖u‖_Σ̇² ≤ ‖u‖_{Ω2}² ≤ max{½ − 1/(pδ_p) + ε₁/2, ½ + 1/(pδ_p) + |Ω|²/(2ε₁)}·‖u‖_Σ̇²."""
    if not params.omega_mag or params.p_delta <= 2.0 + const.EXPONENT_TOLERANCE:
        return [SuiteResult("omega2_sandwich", 0, 0, float("nan"), True, "skipped: needs 0 < |Ω| and pδ_p > 2")]
    constants = compute_constants(params, 1.0, 1.0)
    if not constants.frequency_ok:
        return [SuiteResult("omega2_sandwich", 0, 0, float("nan"), True, "skipped: frequency condition fails")]
    inverse, eps1, omega = 1.0 / params.p_delta, constants.eps1, params.omega_mag
    upper = max(0.5 - inverse + 0.5 * eps1, 0.5 + inverse + omega ** 2 / (2.0 * eps1))
    lower = constants.c_omega
    ops = operators_for(grid)

    def check(u: WaveField) -> tuple[float, bool]:
        sigma_dot = ops.grad_sq(u.values) + ops.xweighted_sq(u.values)
        value = norm_omega2(u, params)
        slack = const.CHECK_SLACK * sigma_dot
        return value / (upper * sigma_dot), lower * sigma_dot - slack <= value <= upper * sigma_dot + slack

    return [_run_suite("omega2_sandwich", check, grid, n_fields, seed, workers,
                       f"𝒞_Ω = {lower:.6g}, upper = {upper:.6g}")]


def parseval_suite(grid: GridSpec, n_fields: int, seed: int, workers: int = 1) -> list[SuiteResult]:
    """Mass and ‖∇u‖₂² agree between physical-space sums and transform-space sums."""
    ops = operators_for(grid)

    def check(u: WaveField) -> tuple[float, bool]:
        transformed = ops.fft(u.values)
        spectral_mass = float(np.sum(np.abs(transformed) ** 2)) * ops.cell_volume / grid.node_count
        physical_grad = sum(ops.mass(ops.derivative(u.values, axis)) for axis in range(grid.dim))
        mass_defect = abs(spectral_mass - ops.mass(u.values)) / ops.mass(u.values)
        grad_defect = abs(physical_grad - ops.grad_sq(u.values)) / ops.grad_sq(u.values)
        defect = max(mass_defect, grad_defect)
        return defect, defect <= const.IDENTITY_TOLERANCE

    return [_run_suite("parseval", check, grid, n_fields, seed, workers, "relative defect")]


def lz_adjoint_suite(grid: GridSpec, n_fields: int, seed: int, workers: int = 1) -> list[SuiteResult]:
    """⟨u, L_z v⟩ = ⟨L_z u, v⟩ on pairs of random fields."""
    ops = operators_for(grid)

    def check(u: WaveField) -> tuple[float, bool]:
        v = np.roll(np.conj(u.values), 1, axis=0) * np.exp(-0.05 * ops.r2)
        lhs = ops.inner(u.values, ops.apply_lz(v))
        rhs = ops.inner(ops.apply_lz(u.values), v)
        scale = math.sqrt(ops.mass(u.values) * ops.mass(ops.apply_lz(v))) or 1.0
        defect = abs(lhs - rhs) / scale
        return defect, defect <= const.IDENTITY_TOLERANCE

    return [_run_suite("lz_self_adjoint", check, grid, n_fields, seed, workers, "relative defect")]


def run_property_suites(grid: GridSpec, params: PhysicsParams, gn_const: float,
                        n_fields: int = const.CHECK_DEFAULT_FIELDS, seed: int = 0, workers: int = 1,
                        profile: Optional[RadialProfile] = None) -> pd.DataFrame:
    """
    Runs every suite and returns one row per suite with columns
    suite, fields, failures, worst, passed, note.
    """
    benchmark = Benchmark(f"Property suites ({n_fields} fields each)")
    rows: list[SuiteResult] = []
    rows += weinstein_suite(grid, n_fields, seed, workers)
    rows += gn_suite(grid, params, gn_const, n_fields, seed, workers, profile)
    rows += rotation_chain_suite(grid, params.omega_mag, n_fields, seed, workers)
    rows += omega1_sandwich_suite(grid, params.omega_mag, n_fields, seed, workers)
    rows += omega2_sandwich_suite(grid, params, n_fields, seed, workers)
    rows += parseval_suite(grid, n_fields, seed, workers)
    rows += lz_adjoint_suite(grid, n_fields, seed, workers)
    for row in rows:
        marker = "✅" if row.passed else "❌"
        logger.log(f"{marker} {row.suite}: {row.failures}/{row.fields} failures, worst {row.worst:.6g}",
                   indent_level=2)
    benchmark.print_time(level=1)
    return pd.DataFrame([asdict(row) for row in rows])
