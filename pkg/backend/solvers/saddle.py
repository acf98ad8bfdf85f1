"""
Mountain-pass machinery: the scaling endpoint v_c, the explicit dilation path joining it to the
local minimizer, an elastic-band relaxation that lowers the path maximum, and a Newton–Krylov
refinement of the maximal node into a saddle candidate.

The relaxation only ever bounds γ(c) from above, and the refined field is reported as a
candidate: nothing here certifies that it is the critical point of the abstract min-max.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

import components.constants as const
import utils.logger as logger
from backend.functionals import dilate, energy, energy_value, hamiltonian_values, tilde_I_slope
from backend.solver_errors import (CollapsedToMinimizerError, PathTearError, ResolutionError, TailLeakError,
                                   ValidationError)
from backend.solver_models import MountainPassReport, MountainPath, RotationConstants, SaddleOptions
from backend.solvers.descent import renormalize, residual_proxy
from backend.spectral_core import PhysicsParams, SpectralOperators, WaveField, operators_for
from utils.benchmark import Benchmark


def _require_supercritical(params: PhysicsParams) -> None:
    """
    Raises:
        ValidationError: unless a > 0 and pδ_p > 2.
    """
    if params.a <= 0:
        raise ValidationError(f"⚠️ a = {params.a}: without a focusing nonlinearity no dilated state has negative "
                              f"energy, so no mountain-pass endpoint exists.")
    if params.p_delta <= 2.0 + const.EXPONENT_TOLERANCE:
        raise ValidationError(f"⚠️ pδ_p = {params.p_delta:.6g} must exceed 2; the mountain pass needs "
                              f"p > 2 + 4/N = {2.0 + 4.0 / params.dim:.6g}.")


def _dilated_node(u: WaveField, tau: float) -> WaveField:
    """Dilation with the resolution monitor; any loss of resolution asks for a finer grid."""
    try:
        node = dilate(u, tau)
    except TailLeakError as error:
        raise ResolutionError(f"⚠️ The grid cannot resolve u_c compressed by l = {tau:.4g}; increase "
                              f"points_per_axis.") from error
    ops = operators_for(u.grid)
    if ops.spectral_tail(node.values) > const.SPECTRAL_TAIL_LIMIT:
        raise ResolutionError(f"⚠️ u_c compressed by l = {tau:.4g} reaches the top of the spectrum; increase "
                              f"points_per_axis.")
    return node


# ===================================================== ENDPOINTS =====================================================

def endpoint_v_c(u_c: WaveField, params: PhysicsParams, r: float) -> tuple[WaveField, float]:
    """
    v_c = l^{N/2}u_c(lx) with l doubled from 2 until I(v_c) < 0 and ‖v_c‖_Σ̇² > r.

    Raises:
        ValidationError: for a = 0 or a mass-(sub)critical exponent.
        ResolutionError: if the grid loses the compressed field before both criteria hold.
    """
    _require_supercritical(params)
    scale = 2.0
    for _ in range(const.ENDPOINT_MAX_DOUBLINGS):
        v_c = _dilated_node(u_c, scale)
        parts = energy(v_c, params)
        if parts.total < 0.0 and parts.sigma_dot > r:
            logger.log(f"ℹ️ Endpoint at l = {scale:g}: I(v_c) = {parts.total:.6e}, ‖v_c‖_Σ̇² = {parts.sigma_dot:.4g}",
                       indent_level=2)
            return v_c, scale
        scale *= 2.0
    raise ResolutionError(f"⚠️ No negative-energy endpoint up to l = {scale / 2.0:g}; the grid is too coarse for "
                          f"the compression this mass needs.")


def baseline_path(u_c: WaveField, l: float, n_nodes: int, params: PhysicsParams) -> MountainPath:
    """Samples g(t) = (1+t(l−1))^{N/2}u_c((1+t(l−1))x) at n_nodes equispaced t ∈ [0, 1]."""
    if n_nodes < const.MIN_PATH_NODES:
        raise ValidationError(f"⚠️ n_nodes must be at least {const.MIN_PATH_NODES}, got {n_nodes}.")
    ts = np.linspace(0.0, 1.0, n_nodes)
    nodes = [_dilated_node(u_c, 1.0 + t * (l - 1.0)) if t > 0 else u_c for t in ts]
    energies = np.array([energy_value(node, params) for node in nodes])
    return MountainPath(params=ts, nodes=nodes, energies=energies, endpoint_scale=l)


# ================================================== PATH RELAXATION ==================================================

def _node_state(values: np.ndarray, params: PhysicsParams, ops: SpectralOperators,
                c: float) -> tuple[float, np.ndarray]:
    """
    Energy of one path node and its constrained gradient.

    Args:
        values: Node on S(c).
        c: The constraint mass, so the multiplier is ⟨u, Hu⟩/c.

    Returns:
        tuple: (I(u), Hu − ω(u)u).
    """
    value = energy_value(WaveField(ops.grid, values), params)
    gradient = hamiltonian_values(values, params, ops)
    return value, gradient - (ops.inner(values, gradient).real / c) * values


def _sigma_distance(u: np.ndarray, v: np.ndarray, ops: SpectralOperators) -> float:
    """‖u − v‖_Σ."""
    difference = u - v
    return math.sqrt(max(ops.sigma_inner(difference, difference).real, 0.0))


def _reparameterize(values: list[np.ndarray], ts: np.ndarray, distances: list[float], c: float,
                    ops: SpectralOperators) -> tuple[list[np.ndarray], np.ndarray]:
    """Redistributes interior nodes to equal Σ arc length, interpolating between neighbours on S(c)."""
    arc = np.concatenate([[0.0], np.cumsum(distances)])
    arc /= arc[-1]
    targets = np.linspace(0.0, 1.0, len(values))
    result = [values[0]]
    for target in targets[1:-1]:
        j = min(int(np.searchsorted(arc, target, side="right")) - 1, len(values) - 2)
        weight = (target - arc[j]) / (arc[j + 1] - arc[j])
        result.append(renormalize((1.0 - weight) * values[j] + weight * values[j + 1], c, ops))
    result.append(values[-1])
    return result, np.interp(targets, arc, ts)


def _baseline_between(u_c: WaveField, v_c: WaveField, n_nodes: int, params: PhysicsParams) -> MountainPath:
    """
    Dilation baseline from u_c to v_c, with the scale l read off the kinetic ratio
    ‖∇v_c‖²/‖∇u_c‖² = l².

    Returns:
        The `baseline_path` samples, with the last node replaced by v_c itself so both
        endpoints match the caller's fields exactly.
    """
    ops = operators_for(u_c.grid)
    scale = math.sqrt(ops.grad_sq(v_c.values) / ops.grad_sq(u_c.values))
    path = baseline_path(u_c, scale, n_nodes, params)
    energies = np.array(path.energies)
    energies[-1] = energy_value(v_c, params)
    return MountainPath(params=path.params, nodes=path.nodes[:-1] + [v_c], energies=energies, endpoint_scale=scale)


def estimate_gamma(u_c: WaveField, v_c: WaveField, params: PhysicsParams, opts: Optional[SaddleOptions] = None,
                   initial: Optional[MountainPath] = None) -> tuple[float, MountainPath]:
    """
    Relaxes a path from u_c to v_c to lower its energy maximum, giving an upper estimate of γ(c).

    Interior nodes move along the preconditioned constrained gradient with its tangential part
    removed, weighted by a softmax of their energies (weight 1 at the current maximum). Springs
    along the tangent keep the Σ spacing even. The softmax temperature starts at a fraction of
    the path's energy span and is annealed every `anneal_every` sweeps. The lowest-maximum path
    seen is returned, so the estimate never exceeds the starting path's maximum.

    Args:
        initial: Starting path with the same endpoints; the dilation baseline from u_c to v_c
            when omitted, so the estimate never exceeds the baseline maximum.

    Raises:
        PathTearError: if adjacent nodes drift apart twice, once before and once after a
            re-parameterization.
    """
    _require_supercritical(params)
    opts = opts or SaddleOptions()
    path = initial or _baseline_between(u_c, v_c, opts.n_nodes, params)
    ops = operators_for(u_c.grid)
    c = ops.mass(u_c.values)
    n = len(path.nodes)

    values = [np.array(node.values) for node in path.nodes]
    ts = np.array(path.params, dtype=float)
    ends = (float(path.energies[0]), float(path.energies[-1]))
    distances = [_sigma_distance(values[j], values[j + 1], ops) for j in range(n - 1)]
    tear_limit = const.PATH_TEAR_FACTOR * float(np.mean(distances))
    temperature = const.SOFTMAX_INITIAL_TEMPERATURE * max(float(np.ptp(path.energies)), 1e-300)
    step = opts.step
    best = (path.max_energy, list(values), np.array(path.energies), ts.copy())
    previous_max = path.max_energy
    reparameterized = False

    benchmark = Benchmark(f"Path relaxation ({n} nodes)")
    logger.log(f"🔄 Relaxing the path: baseline max {path.max_energy:.8e}", indent_level=2)
    with ThreadPoolExecutor(max_workers=max(1, opts.workers)) as executor:
        for sweep in range(1, opts.max_sweeps + 1):
            states = list(executor.map(lambda v: _node_state(v, params, ops, c), values[1:-1]))
            energies = np.array([ends[0], *[state[0] for state in states], ends[1]])
            current_max = float(np.max(energies))
            if current_max < best[0]:
                best = (current_max, list(values), energies, ts.copy())
            if current_max > previous_max + const.MONOTONE_TOLERANCE * abs(previous_max):
                step = max(0.5 * step, const.DESCENT_MIN_STEP)
            previous_max = current_max

            distances = [_sigma_distance(values[j], values[j + 1], ops) for j in range(n - 1)]
            if max(distances) > tear_limit:
                if reparameterized:
                    raise PathTearError(f"⚠️ Adjacent nodes {int(np.argmax(distances))} and "
                                        f"{int(np.argmax(distances)) + 1} are {max(distances):.4g} apart in Σ "
                                        f"(limit {tear_limit:.4g}) after re-parameterization.")
                logger.log(f"⚠️ Path tear at sweep {sweep}; re-parameterizing once", indent_level=2)
                values, ts = _reparameterize(values, ts, distances, c, ops)
                reparameterized = True
                continue

            interior = energies[1:-1]
            weights = np.exp((interior - interior.max()) / temperature)
            top_force = 0.0
            updated = [values[0]]
            for j in range(1, n - 1):
                residual = states[j - 1][1]
                tangent = values[j + 1] - values[j - 1]
                tangent = tangent - (ops.inner(values[j], tangent).real / c) * values[j]
                tangent = tangent / math.sqrt(max(ops.mass(tangent), 1e-300))
                direction = ops.hamiltonian_preconditioner(residual)
                direction = direction - ops.inner(tangent, direction).real * tangent
                if weights[j - 1] == 1.0:
                    top_force = math.sqrt(max(ops.inner(direction, residual).real, 0.0))
                update = -weights[j - 1] * direction + opts.spring * (distances[j] - distances[j - 1]) * tangent
                update = update - (ops.inner(values[j], update).real / c) * values[j]
                updated.append(renormalize(values[j] + step * update, c, ops))
            updated.append(values[-1])
            values = updated

            if top_force < opts.tol_residual:
                logger.log(f"ℹ️ Top node stationary after {sweep} sweeps", indent_level=2, debug=True)
                break
            if sweep % opts.anneal_every == 0:
                temperature *= opts.anneal_factor
                logger.log(f"ℹ️ Sweep {sweep}: max {current_max:.8e}, temperature {temperature:.3e}",
                           indent_level=2, debug=True)

    gamma_c, best_values, best_energies, best_ts = best
    logger.log(f"✅ γ(c) upper estimate {gamma_c:.8e} (baseline {path.max_energy:.8e})", indent_level=2)
    benchmark.print_time(level=2)
    nodes = [WaveField(u_c.grid, v) for v in best_values]
    return gamma_c, MountainPath(params=best_ts, nodes=nodes, energies=best_energies,
                                 endpoint_scale=path.endpoint_scale)


# ================================================= SADDLE REFINEMENT =================================================

def _nonlinear_jvp(u: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    """Derivative of u ↦ |u|^{p−2}u in direction h: |u|^{p−2}h + (p−2)|u|^{p−4}Re(ūh)u."""
    modulus = np.abs(u)
    safe = np.where(modulus > 0.0, modulus, 1.0)
    cross = np.where(modulus > 0.0, safe ** (p - 4.0), 0.0) * np.real(np.conj(u) * h) * u
    return modulus ** (p - 2.0) * h + (p - 2.0) * cross


def _hessian_action(h: np.ndarray, values: np.ndarray, omega: float, params: PhysicsParams,
                    ops: SpectralOperators) -> np.ndarray:
    result = 0.5 * ops.ifft(ops.k2 * ops.fft(h)) + 0.5 * ops.r2 * h - omega * h
    if params.omega_mag:
        result = result - params.omega_mag * ops.apply_lz(h)
    if params.a:
        if params.dealiased:
            jvp = _nonlinear_jvp(ops.to_fine(values, params.p), ops.to_fine(h, params.p), params.p)
            result = result - params.a * ops.from_fine(jvp, params.p)
        else:
            result = result - params.a * _nonlinear_jvp(values, h, params.p)
    return result


def _newton_direction(values: np.ndarray, omega: float, residual: np.ndarray, params: PhysicsParams,
                      ops: SpectralOperators, c: float) -> np.ndarray:
    """
    Solves the linearized constrained equation on the tangent space of S(c), with the mass
    direction u and the phase direction iu projected out. The operator is only real-linear,
    so GMRES runs on stacked real and imaginary parts.
    """
    phase = 1j * values
    shape, size = values.shape, values.size

    def project(h: np.ndarray) -> np.ndarray:
        h = h - (ops.inner(values, h).real / c) * values
        return h - (ops.inner(phase, h).real / c) * phase

    def to_complex(x: np.ndarray) -> np.ndarray:
        return (x[:size] + 1j * x[size:]).reshape(shape)

    def to_real(z: np.ndarray) -> np.ndarray:
        return np.concatenate([z.real.ravel(), z.imag.ravel()])

    operator = LinearOperator(
        (2 * size, 2 * size), dtype=np.float64,
        matvec=lambda x: to_real(project(_hessian_action(project(to_complex(x)), values, omega, params, ops))))
    preconditioner = LinearOperator(
        (2 * size, 2 * size), dtype=np.float64,
        matvec=lambda x: to_real(project(ops.hamiltonian_preconditioner(project(to_complex(x))))))
    solution, info = gmres(operator, to_real(-project(residual)), rtol=const.GMRES_RTOL, atol=0.0,
                           restart=const.GMRES_RESTART, maxiter=const.GMRES_MAX_CYCLES, M=preconditioner)
    if info > 0:
        logger.log(f"ℹ️ GMRES stopped short of its tolerance ({info} iterations)", indent_level=3, debug=True)
    return project(to_complex(solution))


def _constrained(values: np.ndarray, params: PhysicsParams, ops: SpectralOperators,
                 c: float) -> tuple[np.ndarray, float]:
    """Residual Hu − ωu with its multiplier ω = ⟨u, Hu⟩/c."""
    gradient = hamiltonian_values(values, params, ops)
    omega = ops.inner(values, gradient).real / c
    return gradient - omega * values, omega


def refine_saddle(path: MountainPath, params: PhysicsParams, opts: Optional[SaddleOptions] = None,
                  constants: Optional[RotationConstants] = None) -> MountainPassReport:
    """
    Refines the maximal node of a relaxed path into a constrained critical point.

    Each damped Newton step solves the linearized equation Hu − ω(u)u = 0 on the tangent space
    and backtracks on the preconditioned residual norm. Along the way ω_n, Q_n and the slack of
    I(v) − (2/(pδ_p))Q(v) ≥ 𝒞_Ω‖v‖_Σ̇² are recorded.

    Args:
        path: Relaxed path whose first node is the local minimizer, so that I(path[0]) = m_c^r.
        constants: Supplies 𝒞_Ω for the boundedness monitor; the monitor is skipped without it.

    Returns:
        MountainPassReport: `accepted` holds only when both residual certificates pass and the
        candidate sits above m_c^r.

    Raises:
        ValidationError: if the path maximum sits at an endpoint.
        CollapsedToMinimizerError: if an iterate falls back to the minimizer level.
        ResolutionError: if an iterate reaches the top of the spectrum.
    """
    _require_supercritical(params)
    opts = opts or SaddleOptions()
    top = path.max_index
    if top in (0, len(path.nodes) - 1):
        raise ValidationError("⚠️ The path maximum sits at an endpoint; there is no interior peak to refine.")
    m_c_r, gamma_c = float(path.energies[0]), path.max_energy
    start = path.nodes[top]
    grid = start.grid
    ops = operators_for(grid)
    c = ops.mass(path.nodes[0].values)
    c_omega = constants.c_omega if constants is not None else None

    omega_history, q_history, bound_slack = [], [], []

    def record(values: np.ndarray) -> float:
        parts = energy(WaveField(grid, values), params)
        omega_history.append(parts.omega_est)
        q_history.append(parts.pohozaev)
        if c_omega is not None:
            slack = parts.total - 2.0 / params.p_delta * parts.pohozaev - c_omega * parts.sigma_dot
            bound_slack.append(slack)
            if slack < -const.BOUND_SLACK_TOLERANCE:
                logger.log(f"⚠️ Boundedness inequality violated by {-slack:.3e}", indent_level=3)
        return parts.total

    benchmark = Benchmark("Saddle refinement")
    values = renormalize(np.array(start.values), c, ops)
    residual, omega = _constrained(values, params, ops, c)
    merit = residual_proxy(residual, ops)
    record(values)
    grad_residual = ops.sigma_dual_norm(residual)
    iters = 0
    for iters in range(1, opts.max_newton + 1):
        if grad_residual <= opts.tol_residual:
            iters -= 1
            break
        direction = _newton_direction(values, omega, residual, params, ops, c)
        damping = 1.0
        while damping >= const.NEWTON_MIN_DAMPING:
            trial = renormalize(values + damping * direction, c, ops)
            trial_residual, trial_omega = _constrained(trial, params, ops, c)
            trial_merit = residual_proxy(trial_residual, ops)
            if trial_merit < merit:
                break
            damping *= 0.5
        else:
            logger.log(f"⚠️ Newton step {iters} found no residual decrease; stopping", indent_level=2)
            iters -= 1
            break

        values, residual, omega, merit = trial, trial_residual, trial_omega, trial_merit
        value = record(values)
        if value <= m_c_r + const.COLLAPSE_TOLERANCE:
            raise CollapsedToMinimizerError(f"⚠️ Refinement collapsed to the minimizer: I = {value:.8e} is within "
                                            f"{const.COLLAPSE_TOLERANCE:g} of m_c^r = {m_c_r:.8e}.")
        if ops.spectral_tail(values) > const.SPECTRAL_TAIL_LIMIT:
            raise ResolutionError("⚠️ The saddle iterate reaches the top of the spectrum; refine the grid.")
        grad_residual = ops.sigma_dual_norm(residual)
        logger.log(f"ℹ️ Newton {iters}: I = {value:.10e}, residual {grad_residual:.3e}, damping {damping:g}",
                   indent_level=3, debug=True)

    saddle = WaveField(grid, values)
    parts = energy(saddle, params)
    try:
        slope = tilde_I_slope(saddle, params)
    except TailLeakError:
        slope = float("nan")
    q_ok = abs(parts.pohozaev) <= const.SADDLE_Q_TOLERANCE * parts.sigma_dot
    residual_ok = grad_residual <= const.SADDLE_RESIDUAL_TOLERANCE
    accepted = q_ok and residual_ok and parts.total > m_c_r
    if accepted:
        logger.log(f"✅ Saddle candidate accepted: I = {parts.total:.8e}, Q = {parts.pohozaev:.3e}, "
                   f"ω̂ = {parts.omega_est:.8f}", indent_level=2)
    else:
        logger.log(f"⚠️ Saddle candidate rejected: |Q| ok = {q_ok}, residual {grad_residual:.3e}", indent_level=2)
    benchmark.print_time(level=2)

    return MountainPassReport(
        gamma_c=gamma_c,
        path_nodes=path.to_array(),
        saddle_field=saddle,
        saddle_energy=parts.total,
        saddle_Q=parts.pohozaev,
        saddle_grad_residual=grad_residual,
        omega_hat=parts.omega_est,
        m_c_r=m_c_r,
        accepted=accepted,
        margin=gamma_c - m_c_r,
        saddle_sigma_dot=parts.sigma_dot,
        endpoint_scale=path.endpoint_scale,
        newton_iters=iters,
        dilation_slope=slope,
        omega_history=omega_history,
        q_history=q_history,
        bound_slack=bound_slack,
    )
