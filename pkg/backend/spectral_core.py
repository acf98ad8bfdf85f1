"""
Discretization of fields on a truncated periodic box and the spectral operators acting on them.

Fields live on [−L, L)^N with M nodes per axis. Derivatives are exact Fourier multipliers,
the trap weight |x|² uses the plain box coordinates, and all quadratures are the periodic
trapezoidal rule (spectrally accurate for fields that have decayed at the box edge).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import eval_hermite

import components.constants as const
import utils.logger as logger
from backend.solver_errors import GridError, NonFiniteFieldError, TailLeakError, ValidationError, ZeroMassError
from utils.utils import is_even_integer, is_power_of_two

_fft_workers = 1


def set_fft_workers(workers: int) -> None:
    """Threads used by scipy.fft. One (the default) keeps every result bitwise reproducible."""
    global _fft_workers
    _fft_workers = max(1, int(workers))


# ====================================================== TYPES ======================================================

@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [−L, L)^N."""
    dim: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GridError(f"⚠️ dim must be 2 or 3, got {self.dim}.")
        if float(self.points_per_axis) != int(self.points_per_axis):
            raise GridError(f"⚠️ points_per_axis must be an integer, got {self.points_per_axis}.")
        points = int(self.points_per_axis)
        if points < const.MIN_POINTS_PER_AXIS or not is_power_of_two(points):
            raise GridError(f"⚠️ points_per_axis must be a power of two ≥ {const.MIN_POINTS_PER_AXIS}, got {points}.")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise GridError(f"⚠️ half_width must be positive, got {self.half_width}.")
        if points ** self.dim * 16 > const.MAX_FIELD_BYTES:
            raise GridError(f"⚠️ {points}^{self.dim} complex nodes exceed the memory cap of "
                            f"{const.MAX_FIELD_BYTES} bytes.")
        object.__setattr__(self, "points_per_axis", points)
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def node_count(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def nyquist(self) -> float:
        """Largest resolved wavenumber π/h."""
        return math.pi / self.spacing

    def axis_coordinates(self) -> NDArray[np.float64]:
        """Node coordinates −L + k·h along one axis."""
        return -self.half_width + self.spacing * np.arange(self.points_per_axis, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class WaveField:
    """
    Complex field on a grid. The value array is copied on construction and made read-only, so
    a WaveField behaves as an immutable value.
    """
    grid: GridSpec
    values: NDArray[np.complex128]

    def __post_init__(self):
        array = np.array(self.values, dtype=np.complex128, copy=True)
        if array.size != self.grid.node_count:
            raise ValidationError(f"⚠️ Field has {array.size} values, grid expects {self.grid.node_count}.")
        array = array.reshape(self.grid.shape)
        if not np.all(np.isfinite(array)):
            raise NonFiniteFieldError("⚠️ Field contains NaN or Inf entries.")
        array.setflags(write=False)
        object.__setattr__(self, "values", array)

    def flat(self) -> NDArray[np.complex128]:
        """Row-major view over (x₁, …, x_N)."""
        return self.values.ravel(order="C")

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def with_values(self, values: NDArray) -> "WaveField":
        return WaveField(self.grid, values)

    def scaled(self, factor: complex) -> "WaveField":
        return WaveField(self.grid, self.values * factor)

    def normalized(self, mass: float) -> "WaveField":
        """Rescales to the given mass."""
        current = self.mass()
        if current <= 0.0:
            raise ZeroMassError("⚠️ Cannot normalize a field with zero mass.")
        return self.scaled(math.sqrt(mass / current))


@dataclass(frozen=True)
class PhysicsParams:
    """
    Coefficients of the rotating NLS: dimension N, interaction strength a, exponent p and
    rotation speed |Ω|. δ_p is always derived, never stored.
    """
    dim: int
    a: float
    p: float
    omega_mag: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"⚠️ dim must be 2 or 3, got {self.dim}.")
        if not (math.isfinite(self.a) and self.a >= 0.0):
            raise ValidationError(f"⚠️ a must be a non-negative real, got {self.a}.")
        lower = 2.0 + 4.0 / self.dim
        if not math.isfinite(self.p) or self.p < lower - const.EXPONENT_TOLERANCE:
            raise ValidationError(f"⚠️ p must satisfy p ≥ 2 + 4/N = {lower:.6g}, got {self.p}.")
        if self.dim == 3 and self.p >= 6.0:
            raise ValidationError(f"⚠️ p must stay below the critical Sobolev exponent 6 for N=3, got {self.p}.")
        if self.dim == 2 and self.p > const.MAX_EXPONENT_2D:
            raise ValidationError(f"⚠️ p is capped at {const.MAX_EXPONENT_2D} for N=2, got {self.p}.")
        if not (0.0 <= self.omega_mag < 1.0):
            raise ValidationError(f"⚠️ omega_mag must lie in [0,1), got {self.omega_mag}.")

    @property
    def delta_p(self) -> float:
        return self.dim * (self.p - 2.0) / (2.0 * self.p)

    @property
    def p_delta(self) -> float:
        return self.p * self.delta_p

    @property
    def is_mass_critical(self) -> bool:
        return abs(self.p_delta - 2.0) <= 1e-10

    @property
    def dealiased(self) -> bool:
        return is_even_integer(self.p)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "a": self.a, "p": self.p, "omega_mag": self.omega_mag,
                "delta_p": self.delta_p}


# ==================================================== OPERATORS ====================================================

class SpectralOperators:
    """
    Coordinate and wavenumber tables for one grid, plus the array-level operators built on
    them. Instances are cached per grid by `operators_for`; they hold no mutable state.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n, m, h = grid.dim, grid.points_per_axis, grid.spacing
        self.cell_volume = grid.cell_volume
        self.axis = grid.axis_coordinates()
        self.k_axis = 2.0 * np.pi * np.fft.fftfreq(m, d=h)
        k_derivative = self.k_axis.copy()
        k_derivative[m // 2] = 0.0

        self.coords = np.meshgrid(*([self.axis] * n), indexing="ij", sparse=True)
        waves = np.meshgrid(*([self.k_axis] * n), indexing="ij", sparse=True)
        self.r2 = sum(c ** 2 for c in self.coords) * np.ones(grid.shape)
        self.rho2 = (self.coords[0] ** 2 + self.coords[1] ** 2) * np.ones(grid.shape)
        self.k2 = sum(k ** 2 for k in waves) * np.ones(grid.shape)

        self._derivative_multipliers = []
        for axis in range(n):
            shape = [1] * n
            shape[axis] = m
            self._derivative_multipliers.append((1j * k_derivative).reshape(shape))

        cutoff = const.DEALIAS_FRACTION * grid.nyquist
        inside = np.abs(self.k_axis) <= cutoff + 1e-12
        self.dealias_mask = functools.reduce(np.logical_and, np.meshgrid(*([inside] * n), indexing="ij"))
        self._band_axis = inside
        self._band_numbers = np.rint(self.k_axis * m * h / (2.0 * np.pi)).astype(int)
        self._band_limit = int(np.max(np.abs(self._band_numbers[inside])))
        self._fine_cache: dict[float, int] = {}

        shell = (1.0 - const.BOUNDARY_SHELL_FRACTION) * grid.half_width
        self.boundary_mask = functools.reduce(
            np.logical_or, [np.abs(c) >= shell for c in np.meshgrid(*([self.axis] * n), indexing="ij")])

    # --- transforms ---

    def fft(self, values: NDArray) -> NDArray:
        return sfft.fftn(values, workers=_fft_workers)

    def ifft(self, values: NDArray) -> NDArray:
        return sfft.ifftn(values, workers=_fft_workers)

    def axis_fft(self, values: NDArray, axis: int) -> NDArray:
        return sfft.fft(values, axis=axis, workers=_fft_workers)

    def axis_ifft(self, values: NDArray, axis: int) -> NDArray:
        return sfft.ifft(values, axis=axis, workers=_fft_workers)

    def derivative(self, values: NDArray, axis: int) -> NDArray:
        transformed = sfft.fft(values, axis=axis, workers=_fft_workers)
        return sfft.ifft(transformed * self._derivative_multipliers[axis], axis=axis, workers=_fft_workers)

    def laplacian(self, values: NDArray) -> NDArray:
        return self.ifft(-self.k2 * self.fft(values))

    # --- quadratures ---

    def inner(self, u: NDArray, v: NDArray) -> complex:
        """Discrete ∫ ū v."""
        return complex(np.vdot(u, v) * self.cell_volume)

    def mass(self, values: NDArray) -> float:
        return float(np.sum(np.abs(values) ** 2) * self.cell_volume)

    def grad_sq(self, values: NDArray) -> float:
        """‖∇u‖₂² by Parseval."""
        transformed = self.fft(values)
        return float(np.sum(self.k2 * np.abs(transformed) ** 2) * self.cell_volume / self.grid.node_count)

    def xweighted_sq(self, values: NDArray) -> float:
        return float(np.sum(self.r2 * np.abs(values) ** 2) * self.cell_volume)

    def rho_weighted_sq(self, values: NDArray) -> float:
        """‖(x₁² + x₂²)^{1/2} u‖₂², the in-plane part of the trap weight."""
        return float(np.sum(self.rho2 * np.abs(values) ** 2) * self.cell_volume)

    def p_norm_p(self, values: NDArray, p: float, dealiased: bool) -> float:
        """
        ‖u‖_p^p. For even p the filtered field is sampled on a grid fine enough that the
        quadrature of |Pu|^p is exact, so the discrete functional stays dilation covariant.
        """
        if not dealiased:
            return float(np.sum(np.abs(values) ** p) * self.cell_volume)
        fine = self.to_fine(values, p)
        return float(np.sum(np.abs(fine) ** p) * self.cell_volume * self._fine_ratio(p) ** -self.grid.dim)

    def nonlinear_term(self, values: NDArray, p: float, dealiased: bool) -> NDArray:
        """|u|^{p−2}u, or for even p the exact gradient partner of `p_norm_p` projected back onto the band."""
        if not dealiased:
            return np.abs(values) ** (p - 2.0) * values
        fine = self.to_fine(values, p)
        return self.from_fine(np.abs(fine) ** (p - 2.0) * fine, p)

    # --- padded evaluation of products ---

    def fine_points(self, p: float) -> int:
        """Smallest fast FFT length that resolves every product of p band-limited factors."""
        if p not in self._fine_cache:
            self._fine_cache[p] = max(self.grid.points_per_axis, sfft.next_fast_len(int(p * self._band_limit) + 1))
        return self._fine_cache[p]

    def _fine_ratio(self, p: float) -> float:
        return self.fine_points(p) / self.grid.points_per_axis

    def _band_slots(self, p: float) -> tuple[tuple, tuple]:
        fine = self.fine_points(p)
        coarse_index = np.flatnonzero(self._band_axis)
        fine_index = self._band_numbers[coarse_index] % fine
        n = self.grid.dim
        return np.ix_(*([coarse_index] * n)), np.ix_(*([fine_index] * n))

    def to_fine(self, values: NDArray, p: float) -> NDArray:
        """Samples the trigonometric interpolant of the filtered field on the fine grid for exponent p."""
        coarse_slots, fine_slots = self._band_slots(p)
        padded = np.zeros((self.fine_points(p),) * self.grid.dim, dtype=np.complex128)
        padded[fine_slots] = self.fft(values)[coarse_slots]
        return sfft.ifftn(padded, workers=_fft_workers) * self._fine_ratio(p) ** self.grid.dim

    def from_fine(self, fine_values: NDArray, p: float) -> NDArray:
        """Projects a fine-grid field onto the coarse filtered band (adjoint partner of `to_fine`)."""
        coarse_slots, fine_slots = self._band_slots(p)
        spectrum = sfft.fftn(fine_values, workers=_fft_workers)
        coarse = np.zeros(self.grid.shape, dtype=np.complex128)
        coarse[coarse_slots] = spectrum[fine_slots] * self._fine_ratio(p) ** -self.grid.dim
        return self.ifft(coarse)

    # --- angular momentum ---

    def apply_lz(self, values: NDArray) -> NDArray:
        """L_z u = −i(x₁∂₂u − x₂∂₁u), acting in the (x₁, x₂) plane."""
        d1 = self.derivative(values, 0)
        d2 = self.derivative(values, 1)
        return -1j * (self.coords[0] * d2 - self.coords[1] * d1)

    def lz_expectation(self, values: NDArray) -> float:
        return self.inner(values, self.apply_lz(values)).real

    # --- Σ geometry ---

    def sigma_inner(self, u: NDArray, v: NDArray) -> complex:
        """Complex Σ inner product ∫ ūv + ∇ū·∇v + |x|²ūv."""
        u_hat, v_hat = self.fft(u), self.fft(v)
        gradient_part = np.vdot(u_hat, self.k2 * v_hat) * self.cell_volume / self.grid.node_count
        trap_part = np.vdot(u, self.r2 * v) * self.cell_volume
        return complex(self.inner(u, v) + gradient_part + trap_part)

    def sigma_operator(self, values: NDArray) -> NDArray:
        """(1 − Δ + |x|²) u, the Riesz map of Σ."""
        return values + self.ifft(self.k2 * self.fft(values)) + self.r2 * values

    def sigma_preconditioner(self, values: NDArray) -> NDArray:
        weight = 1.0 / np.sqrt(1.0 + self.r2)
        return weight * self.ifft(self.fft(weight * values) / (1.0 + self.k2))

    def hamiltonian_preconditioner(self, values: NDArray, shift: float = const.PRECONDITIONER_SHIFT) -> NDArray:
        """Combined trap/kinetic preconditioner V^{-1/2} T^{-1} V^{-1/2} with V = α + |x|²/2, T = α + |k|²/2."""
        weight = 1.0 / np.sqrt(shift + 0.5 * self.r2)
        return weight * self.ifft(self.fft(weight * values) / (shift + 0.5 * self.k2))

    def sigma_dual_norm(self, residual: NDArray) -> float:
        """
        Norm of a residual in the dual of Σ: sqrt(Re⟨r, (1 − Δ + |x|²)^{-1} r⟩), the Σ-norm of
        the Σ-gradient it represents. The inverse is applied by preconditioned CG.
        """
        if not np.any(residual):
            return 0.0
        shape, size = residual.shape, residual.size
        operator = LinearOperator((size, size), dtype=np.complex128,
                                  matvec=lambda v: self.sigma_operator(v.reshape(shape)).ravel())
        preconditioner = LinearOperator((size, size), dtype=np.complex128,
                                        matvec=lambda v: self.sigma_preconditioner(v.reshape(shape)).ravel())
        solution, info = cg(operator, residual.ravel(), rtol=const.CG_RTOL, atol=0.0,
                            maxiter=const.CG_MAX_ITERS, M=preconditioner)
        if info > 0:
            logger.log(f"⚠️ Σ-dual norm CG stopped after {info} iterations", debug=True)
        value = np.vdot(residual.ravel(), solution).real * self.cell_volume
        return math.sqrt(max(value, 0.0))

    # --- resolution monitors ---

    def boundary_leak(self, values: NDArray) -> float:
        total = np.sum(np.abs(values) ** 2)
        if total == 0.0:
            return 0.0
        return float(np.sum(np.abs(values[self.boundary_mask]) ** 2) / total)

    def spectral_tail(self, values: NDArray) -> float:
        power = np.abs(self.fft(values)) ** 2
        total = np.sum(power)
        if total == 0.0:
            return 0.0
        return float(np.sum(power[~self.dealias_mask]) / total)

    # --- dilation ---

    def _dilation_matrix(self, tau: float) -> NDArray[np.complex128]:
        """
        Per-axis matrix evaluating the trigonometric interpolant of a sampled field at τ·x.
        Targets outside the box map to zero.
        """
        m = self.grid.points_per_axis
        origin = self.axis[0]
        targets = tau * self.axis
        phases = np.exp(1j * np.outer(targets - origin, self.k_axis))
        phases[:, m // 2] = np.cos(self.k_axis[m // 2] * (targets - origin))
        phases /= m
        outside = (targets < -self.grid.half_width) | (targets >= self.grid.half_width)
        phases[outside, :] = 0.0
        dft = sfft.fft(np.eye(m), axis=0)
        return phases @ dft

    def dilate(self, values: NDArray, tau: float) -> NDArray:
        """
        u_τ(x) = τ^{N/2} u(τx) by separable spectral interpolation.

        Raises:
            TailLeakError: if the resampled field loses or gains more than the allowed
                relative mass (field pushed out of the box or compressed below grid scale).
        """
        if tau <= 0.0 or not math.isfinite(tau):
            raise ValidationError(f"⚠️ Dilation factor must be positive and finite, got {tau}.")
        if tau == 1.0:
            return np.array(values, dtype=np.complex128, copy=True)
        matrix = self._dilation_matrix(tau)
        result = np.asarray(values, dtype=np.complex128)
        for axis in range(self.grid.dim):
            result = np.moveaxis(np.tensordot(matrix, result, axes=([1], [axis])), 0, axis)
        result = result * tau ** (self.grid.dim / 2.0)
        before, after = self.mass(values), self.mass(result)
        if before > 0.0 and abs(after - before) > const.TAIL_LEAK_TOLERANCE * before:
            raise TailLeakError(f"⚠️ Dilation by τ={tau:.6g} changed the mass by a relative "
                                f"{abs(after - before) / before:.3e}; the grid cannot hold the dilated field.")
        return result


@functools.lru_cache(maxsize=16)
def operators_for(grid: GridSpec) -> SpectralOperators:
    return SpectralOperators(grid)


# ==================================================== FIELD API ====================================================

def make_grid(dim: int, points_per_axis: int, half_width: float) -> GridSpec:
    """
    Builds a validated grid on [−L, L)^N.

    Raises:
        GridError: for dim ∉ {2,3}, M not a power of two ≥ 16, or L ≤ 0.
    """
    return GridSpec(int(dim), points_per_axis, float(half_width))


def hermite_ground(grid: GridSpec) -> WaveField:
    """ψ₀ = π^{−N/4} e^{−|x|²/2}, the normalized ground state of −Δ + |x|²."""
    if grid.half_width < const.HERMITE_MIN_HALF_WIDTH:
        raise ValidationError(f"⚠️ hermite_ground needs L ≥ {const.HERMITE_MIN_HALF_WIDTH}, "
                              f"got L = {grid.half_width}.")
    ops = operators_for(grid)
    return WaveField(grid, np.pi ** (-grid.dim / 4.0) * np.exp(-0.5 * ops.r2))


def hermite_state(grid: GridSpec, orders: tuple[int, ...]) -> WaveField:
    """
    Normalized tensor Hermite function ψ_n(x) = Π_j h_{n_j}(x_j), eigenfunction of −Δ + |x|²
    with eigenvalue N + 2Σn_j.
    """
    if len(orders) != grid.dim or any(n < 0 for n in orders):
        raise ValidationError(f"⚠️ Need {grid.dim} non-negative Hermite orders, got {orders}.")
    ops = operators_for(grid)
    values = np.ones(grid.shape, dtype=np.float64)
    for coordinate, order in zip(ops.coords, orders):
        norm = 1.0 / math.sqrt(2.0 ** order * math.factorial(order) * math.sqrt(math.pi))
        values = values * (norm * eval_hermite(order, coordinate) * np.exp(-0.5 * coordinate ** 2))
    return WaveField(grid, values)


def mass(u: WaveField) -> float:
    return u.mass()


def grad_sq_norm(u: WaveField) -> float:
    return operators_for(u.grid).grad_sq(u.values)


def xweighted_sq_norm(u: WaveField) -> float:
    return operators_for(u.grid).xweighted_sq(u.values)


def sigma_dot_sq_norm(u: WaveField) -> float:
    """‖u‖_Σ̇² = ‖∇u‖₂² + ‖xu‖₂²."""
    ops = operators_for(u.grid)
    return ops.grad_sq(u.values) + ops.xweighted_sq(u.values)


def sigma_sq_norm(u: WaveField) -> float:
    """‖u‖_Σ² = ‖u‖₂² + ‖u‖_Σ̇²."""
    return u.mass() + sigma_dot_sq_norm(u)


def sigma_inner(u: WaveField, v: WaveField) -> complex:
    _check_same_grid(u, v)
    return operators_for(u.grid).sigma_inner(u.values, v.values)


def sigma_dual_norm(residual: WaveField) -> float:
    return operators_for(residual.grid).sigma_dual_norm(residual.values)


def apply_Lz(u: WaveField) -> WaveField:
    return WaveField(u.grid, operators_for(u.grid).apply_lz(u.values))


def rotation_expectation(u: WaveField, omega_mag: float) -> float:
    """|Ω|·Re⟨u, L_z u⟩, i.e. ∫ū(Ω·L)u; exactly zero when |Ω| = 0."""
    if omega_mag == 0.0:
        return 0.0
    return omega_mag * operators_for(u.grid).lz_expectation(u.values)


def project_l0(u: WaveField, grid: GridSpec | None = None) -> complex:
    """l₀ = ∫ u ψ₀ against the real Hermite ground state."""
    grid = grid or u.grid
    ops = operators_for(grid)
    psi0 = np.pi ** (-grid.dim / 4.0) * np.exp(-0.5 * ops.r2)
    return complex(np.sum(u.values * psi0) * ops.cell_volume)


def boundary_leak(u: WaveField) -> float:
    return operators_for(u.grid).boundary_leak(u.values)


def spectral_tail(u: WaveField) -> float:
    return operators_for(u.grid).spectral_tail(u.values)


def _check_same_grid(u: WaveField, v: WaveField) -> None:
    if u.grid != v.grid:
        raise ValidationError("⚠️ Fields live on different grids.")
