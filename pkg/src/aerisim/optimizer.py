"""Sum-rate maximization by weighted-MSE block coordinate descent.

The coupled per-element constraints of the transmit/reflect surface
(energy split and quadrature phase coupling) are handled with auxiliary
copies tied to the coefficients by an augmented-Lagrangian penalty whose
factor shrinks whenever the equality violation stagnates. The reflect-only
mode reuses the same machinery with the amplitude block pinned to one.

Block order per inner cycle: {weights, receivers} -> precoder -> surface
coefficients -> auxiliary amplitudes -> auxiliary phases. Every block is an
exact minimizer of the augmented objective over its variables, so the
objective is nonincreasing along the chain for fixed multipliers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ChannelSet
from .evaluation import SurfaceCoefficients, cascade_matrices

logger = logging.getLogger("aerisim.optimizer")

MODE_STAR = "star"
MODE_RIS = "ris"


class SolverDiagnosticError(RuntimeError):
    """Raised when the objective turns non-finite; carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class SolverOptions:
    """Tolerances, iteration caps and mode switches of one solve."""

    mode: str = MODE_STAR
    eps_inner: float = 1e-4
    eps_violation: float = 1e-4
    penalty_shrink: float = 0.7
    penalty_init: float = 1.0
    max_inner: int = 30
    max_outer: int = 100
    bisection_tol: float = 1e-9
    oracle_check: bool = False
    literal_penalty: bool = False

    def __post_init__(self):
        if self.mode not in (MODE_STAR, MODE_RIS):
            raise ValueError(f"unknown mode {self.mode!r}")
        for name in ("eps_inner", "eps_violation", "penalty_init", "bisection_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.penalty_shrink < 1.0:
            raise ValueError("penalty_shrink must lie in (0, 1)")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be >= 1")

    def penalty_weight(self, rho: float) -> float:
        return 0.5 if self.literal_penalty else 1.0 / (2.0 * rho)


@dataclass
class WmmseState:
    varpi: np.ndarray
    nu: np.ndarray


@dataclass
class PddState:
    """Auxiliary copies, duals and penalty factor of the outer loop.

    The auxiliary amplitudes/phases satisfy the energy split and phase
    coupling exactly by construction. Transmission-side arrays are None in
    reflect-only mode.
    """

    aux_r: np.ndarray
    beta_r: np.ndarray
    phi_r: np.ndarray
    lam_r: np.ndarray
    rho: float
    sigma2: np.ndarray
    aux_t: np.ndarray | None = None
    beta_t: np.ndarray | None = None
    phi_t: np.ndarray | None = None
    lam_t: np.ndarray | None = None

    @property
    def ris_mode(self) -> bool:
        return self.aux_t is None


@dataclass
class SolverState:
    """Bundle of all block variables between inner cycles."""

    W: np.ndarray
    coeff: SurfaceCoefficients
    wmmse: WmmseState
    pdd: PddState


@dataclass
class OptimizationResult:
    W: np.ndarray
    coeff: SurfaceCoefficients
    per_user_rates: np.ndarray
    sum_rate: float
    trace: dict
    residuals: dict
    inner_iterations: int
    outer_iterations: int
    status: str
    mode: str
    block_trace: dict | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# block updates (public, array-level)

def update_weights(g: np.ndarray, sigma2) -> np.ndarray:
    """One plus the per-user SINR implied by the gain matrix."""
    varpi, _, _ = kernels.wmmse_update(*_gain_args(g, sigma2))
    return varpi


def update_receivers(g: np.ndarray, sigma2) -> np.ndarray:
    """Scalar receivers minimizing each user's mean square error."""
    _, nu, _ = kernels.wmmse_update(*_gain_args(g, sigma2))
    return nu


def _gain_args(g, sigma2):
    g = np.ascontiguousarray(g, dtype=np.complex128)
    sigma2 = np.ascontiguousarray(
        np.broadcast_to(np.asarray(sigma2, dtype=float), (g.shape[0],)))
    return g, sigma2


def update_precoders(channels: ChannelSet, coeff: SurfaceCoefficients,
                     varpi, nu, p_max: float,
                     bisection_tol: float = 1e-9, mu_hint: float = 0.0):
    """Power-constrained weighted-MSE precoder; returns (W, multiplier)."""
    if p_max <= 0:
        raise ValueError("power budget must be positive")
    T = np.ascontiguousarray(cascade_matrices(channels))
    theta_t, theta_r = _coeff_arrays(coeff)
    h_eff = kernels.effective_channels(T, theta_t, theta_r, channels.user_sides)
    return kernels.precoder_update(
        h_eff, np.asarray(varpi, dtype=float),
        np.ascontiguousarray(nu, dtype=np.complex128),
        float(p_max), float(bisection_tol), float(mu_hint))


def update_surface_coeffs(channels: ChannelSet, W, varpi, nu, pdd: PddState,
                          literal_penalty: bool = False):
    """Unconstrained exact minimizer over both sides' coefficient vectors."""
    T = np.ascontiguousarray(cascade_matrices(channels))
    ris = pdd.ris_mode
    n = T.shape[1]
    zeros = np.zeros(n, dtype=np.complex128)
    gamma = 0.5 if literal_penalty else 1.0 / (2.0 * pdd.rho)
    theta_t, theta_r = kernels.surface_update(
        T, np.ascontiguousarray(W, dtype=np.complex128),
        np.asarray(varpi, dtype=float),
        np.ascontiguousarray(nu, dtype=np.complex128),
        channels.user_sides,
        zeros if ris else np.ascontiguousarray(pdd.aux_t),
        np.ascontiguousarray(pdd.aux_r),
        zeros if ris else np.ascontiguousarray(pdd.lam_t),
        np.ascontiguousarray(pdd.lam_r),
        float(pdd.rho), gamma, ris)
    return (None if ris else theta_t), theta_r


def update_aux_amplitudes(coeff: SurfaceCoefficients, pdd: PddState,
                          oracle_check: bool = False):
    """Optimal energy split of the auxiliary copies for fixed phases."""
    vt_t, vt_r = _penalty_anchor(coeff, pdd)
    ris = pdd.ris_mode
    phi_t = np.zeros_like(vt_r.real) if ris else pdd.phi_t
    beta_t, beta_r = kernels.aux_amplitude_update(vt_t, vt_r, phi_t, pdd.phi_r, ris)
    if oracle_check and not ris:
        beta_t, beta_r = _amplitude_oracle_keep_best(
            vt_t, vt_r, phi_t, pdd.phi_r, beta_t, beta_r)
    return beta_t, beta_r


def update_aux_phases(coeff: SurfaceCoefficients, pdd: PddState,
                      beta_t, beta_r):
    """Optimal quadrature-coupled phases for fixed auxiliary amplitudes."""
    vt_t, vt_r = _penalty_anchor(coeff, pdd)
    ris = pdd.ris_mode
    bt = np.zeros_like(beta_r) if beta_t is None else np.asarray(beta_t, dtype=float)
    return kernels.aux_phase_update(vt_t, vt_r, bt, np.asarray(beta_r, dtype=float), ris)


def pdd_violation(coeff: SurfaceCoefficients, pdd: PddState) -> float:
    """Max-norm gap between the coefficients and their auxiliary copies."""
    viol = float(np.max(np.abs(pdd.aux_r - coeff.theta_r)))
    if not pdd.ris_mode:
        viol = max(viol, float(np.max(np.abs(pdd.aux_t - coeff.theta_t))))
    return viol


def update_duals_penalty(pdd: PddState, coeff: SurfaceCoefficients,
                         previous_violation: float,
                         shrink: float = 0.7) -> PddState:
    """Dual ascent when the violation improved, penalty shrink otherwise.

    The violation counts as improved when it fell to at most 0.9x the
    previous value; then the duals take a step and the penalty factor is
    kept. Otherwise the factor shrinks and the duals stay.
    """
    viol = pdd_violation(coeff, pdd)
    improved = viol <= 0.9 * previous_violation
    rho = pdd.rho
    lam_r = pdd.lam_r
    lam_t = pdd.lam_t
    if improved:
        lam_r = pdd.lam_r + (pdd.aux_r - coeff.theta_r) / rho
        if not pdd.ris_mode:
            lam_t = pdd.lam_t + (pdd.aux_t - coeff.theta_t) / rho
    else:
        rho = shrink * rho
    return PddState(
        aux_r=pdd.aux_r, beta_r=pdd.beta_r, phi_r=pdd.phi_r, lam_r=lam_r,
        rho=rho, sigma2=pdd.sigma2,
        aux_t=pdd.aux_t, beta_t=pdd.beta_t, phi_t=pdd.phi_t, lam_t=lam_t)


def _coeff_arrays(coeff: SurfaceCoefficients):
    theta_r = np.ascontiguousarray(coeff.theta_r, dtype=np.complex128)
    if coeff.ris_mode:
        theta_t = np.zeros_like(theta_r)
    else:
        theta_t = np.ascontiguousarray(coeff.theta_t, dtype=np.complex128)
    return theta_t, theta_r


def _penalty_anchor(coeff: SurfaceCoefficients, pdd: PddState):
    """rho * lambda - theta per side, the constant of the auxiliary updates."""
    theta_t, theta_r = _coeff_arrays(coeff)
    vt_r = pdd.rho * pdd.lam_r - theta_r
    if pdd.ris_mode:
        vt_t = np.zeros_like(vt_r)
    else:
        vt_t = pdd.rho * pdd.lam_t - theta_t
    return vt_t, vt_r


def _amplitude_oracle_keep_best(vt_t, vt_r, phi_t, phi_r, beta_t, beta_r,
                                step: float = 1e-3):
    """Grid search over the split angle; keeps any strictly better point."""
    psi = np.append(np.arange(0.0, np.pi / 2, step), np.pi / 2)
    p = np.real(np.exp(-1j * phi_t) * vt_t)
    q = np.real(np.exp(-1j * phi_r) * vt_r)
    grid_vals = np.sin(psi)[None, :] * p[:, None] + np.cos(psi)[None, :] * q[:, None]
    best_idx = np.argmin(grid_vals, axis=1)
    best = grid_vals[np.arange(p.size), best_idx]
    closed = beta_t * p + beta_r * q
    worse = best < closed - 1e-12
    if np.any(worse):
        logger.warning("amplitude grid beat the closed form on %d element(s); "
                       "keeping the grid point", int(np.sum(worse)))
        beta_t = np.where(worse, np.sin(psi[best_idx]), beta_t)
        beta_r = np.where(worse, np.cos(psi[best_idx]), beta_r)
    return beta_t, beta_r


# ---------------------------------------------------------------------------
# inner loop

class _Arrays:
    """Mutable array bundle used by the inner loop."""

    __slots__ = ("W", "theta_t", "theta_r", "aux_t", "aux_r", "beta_t",
                 "beta_r", "phi_t", "phi_r", "lam_t", "lam_r", "rho",
                 "varpi", "nu", "mu_hint")

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _objective(st: _Arrays, g, sigma2, gamma, ris):
    e = kernels.mse_vector(g, st.nu, sigma2)
    pen = kernels.penalty_value(st.theta_t, st.theta_r, st.aux_t, st.aux_r,
                                st.lam_t, st.lam_r, st.rho, gamma, ris)
    return float(np.dot(st.varpi, e)) + pen


def _run_inner(st: _Arrays, T, sides, sigma2, p_max, opts: SolverOptions,
               ris: bool, g, prev_descent: float, recorder=None,
               outer_idx: int = 0):
    """BCD cycles until the descent objective stalls.

    Termination tracks the weighted MSE minus the log of the weights plus
    the penalty: the quantity every block (including the weight/receiver
    refresh) decreases exactly, so its stall is well defined. Returns
    (g, obj, descent, cycles) with ``obj`` the plain weighted-MSE-plus-
    penalty value at the final point.
    """
    gamma = opts.penalty_weight(st.rho)
    per_block = recorder is not None and recorder.wants_blocks
    descent = prev_descent
    obj = np.inf
    cycles = 0
    for _ in range(opts.max_inner):
        cycles += 1
        if not np.all(np.isfinite(g)):
            raise SolverDiagnosticError(
                f"gains turned non-finite at outer {outer_idx}, cycle {cycles}",
                trace=recorder.dump() if recorder else None)
        st.varpi, st.nu, _ = kernels.wmmse_update(g, sigma2)
        if per_block:
            recorder.block(outer_idx, st, g, sigma2, gamma, ris, new_cycle=True)

        h_eff = kernels.effective_channels(T, st.theta_t, st.theta_r, sides)
        st.W, st.mu_hint = kernels.precoder_update(
            h_eff, st.varpi, st.nu, p_max, opts.bisection_tol, st.mu_hint)
        if per_block:
            g_b = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)
            recorder.block(outer_idx, st, g_b, sigma2, gamma, ris)

        st.theta_t, st.theta_r = kernels.surface_update(
            T, st.W, st.varpi, st.nu, sides, st.aux_t, st.aux_r,
            st.lam_t, st.lam_r, st.rho, gamma, ris)
        if per_block:
            g_b = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)
            recorder.block(outer_idx, st, g_b, sigma2, gamma, ris)

        vt_t = st.rho * st.lam_t - st.theta_t
        vt_r = st.rho * st.lam_r - st.theta_r
        st.beta_t, st.beta_r = kernels.aux_amplitude_update(
            vt_t, vt_r, st.phi_t, st.phi_r, ris)
        if opts.oracle_check and not ris:
            st.beta_t, st.beta_r = _amplitude_oracle_keep_best(
                vt_t, vt_r, st.phi_t, st.phi_r, st.beta_t, st.beta_r)
        st.aux_t = st.beta_t * np.exp(1j * st.phi_t)
        st.aux_r = st.beta_r * np.exp(1j * st.phi_r)
        if per_block:
            g_b = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)
            recorder.block(outer_idx, st, g_b, sigma2, gamma, ris)

        st.phi_t, st.phi_r = kernels.aux_phase_update(
            vt_t, vt_r, st.beta_t, st.beta_r, ris)
        st.aux_t = st.beta_t * np.exp(1j * st.phi_t)
        st.aux_r = st.beta_r * np.exp(1j * st.phi_r)

        g = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)
        new_obj = _objective(st, g, sigma2, gamma, ris)
        if recorder is not None:
            recorder.block_value(outer_idx, st, new_obj)
        if not np.isfinite(new_obj):
            raise SolverDiagnosticError(
                f"objective turned non-finite at outer {outer_idx}, "
                f"cycle {cycles}", trace=recorder.dump() if recorder else None)
        new_descent = new_obj - float(np.sum(np.log(st.varpi)))
        obj = new_obj
        if np.isfinite(descent) and abs(new_descent - descent) \
                <= opts.eps_inner * max(1.0, abs(descent)):
            descent = new_descent
            break
        descent = new_descent
    return g, obj, descent, cycles


class _BlockRecorder:
    """Per-block objective and surrogate values for monotonicity checks."""

    wants_blocks = True

    def __init__(self):
        self.outer = []
        self.objective = []
        self.surrogate = []
        self._row = None

    def block(self, outer_idx, st, g, sigma2, gamma, ris, new_cycle=False):
        if new_cycle:
            self._flush()
            self._row = {"outer": outer_idx, "obj": [], "sur": []}
        obj = _objective(st, g, sigma2, gamma, ris)
        self._push(obj, st)

    def block_value(self, outer_idx, st, obj):
        self._push(obj, st)

    def _push(self, obj, st):
        self._row["obj"].append(obj)
        self._row["sur"].append(obj - float(np.sum(np.log(st.varpi))))

    def _flush(self):
        if self._row is not None:
            self.outer.append(self._row["outer"])
            self.objective.append(self._row["obj"])
            self.surrogate.append(self._row["sur"])
            self._row = None

    def dump(self):
        self._flush()
        return {
            "outer_index": np.asarray(self.outer, dtype=int),
            "objective": np.asarray(self.objective, dtype=float),
            "surrogate": np.asarray(self.surrogate, dtype=float),
        }


def _init_arrays(n, m, k, p_max, ris: bool, rho: float, rng: np.random.Generator):
    W = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    W *= np.sqrt(p_max / np.sum(np.abs(W) ** 2))
    if ris:
        phi_t = np.zeros(n)
        phi_r = rng.uniform(-np.pi, np.pi, n)
        beta_t = np.zeros(n)
        beta_r = np.ones(n)
    else:
        phi_t = rng.uniform(-np.pi, np.pi, n)
        phi_r = phi_t - np.pi / 2
        beta_t = np.full(n, 1.0 / np.sqrt(2.0))
        beta_r = np.full(n, 1.0 / np.sqrt(2.0))
    theta_t = beta_t * np.exp(1j * phi_t)
    theta_r = beta_r * np.exp(1j * phi_r)
    return _Arrays(
        W=np.ascontiguousarray(W),
        theta_t=theta_t, theta_r=theta_r,
        aux_t=theta_t.copy(), aux_r=theta_r.copy(),
        beta_t=beta_t, beta_r=beta_r, phi_t=phi_t, phi_r=phi_r,
        lam_t=np.zeros(n, dtype=np.complex128),
        lam_r=np.zeros(n, dtype=np.complex128),
        rho=rho, varpi=np.ones(k), nu=np.zeros(k, dtype=np.complex128),
        mu_hint=0.0)


def initial_state(channels: ChannelSet, p_max: float, noise_power,
                  opts: SolverOptions, seed) -> SolverState:
    """The solver's starting point as a bundled state.

    Scaled-random feasible precoder, uniform random phases, even energy
    split (amplitude pinned to one in reflect-only mode), auxiliary copies
    equal to the coefficients, zero duals.
    """
    ris = opts.mode == MODE_RIS
    k, n = channels.h_surface_user.shape
    m = channels.h_bs_surface.shape[1]
    sigma2 = np.ascontiguousarray(
        np.broadcast_to(np.asarray(noise_power, dtype=float), (k,)))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    st = _init_arrays(n, m, k, p_max, ris, opts.penalty_init, rng)
    return SolverState(
        W=st.W,
        coeff=_make_coeff(st, ris),
        wmmse=WmmseState(varpi=st.varpi, nu=st.nu),
        pdd=PddState(
            aux_r=st.aux_r, beta_r=st.beta_r, phi_r=st.phi_r, lam_r=st.lam_r,
            rho=st.rho, sigma2=sigma2,
            aux_t=None if ris else st.aux_t,
            beta_t=None if ris else st.beta_t,
            phi_t=None if ris else st.phi_t,
            lam_t=None if ris else st.lam_t))


def inner_bcd(state: SolverState, channels: ChannelSet, p_max: float,
              opts: SolverOptions):
    """Run one inner BCD pass on a bundled state; returns (state, trace).

    The trace holds the descent objective (weighted MSE minus log-weights
    plus penalty) after each completed cycle; it is nonincreasing because
    every block performs an exact minimization. Starting from a converged
    point terminates after a single cycle.
    """
    pdd = state.pdd
    ris = pdd.ris_mode
    n = state.coeff.theta_r.shape[0]
    zeros_c = np.zeros(n, dtype=np.complex128)
    zeros_f = np.zeros(n)
    theta_t, theta_r = _coeff_arrays(state.coeff)
    st = _Arrays(
        W=np.ascontiguousarray(state.W, dtype=np.complex128),
        theta_t=theta_t, theta_r=theta_r,
        aux_t=zeros_c if ris else np.ascontiguousarray(pdd.aux_t),
        aux_r=np.ascontiguousarray(pdd.aux_r),
        beta_t=zeros_f if ris else np.asarray(pdd.beta_t, dtype=float),
        beta_r=np.asarray(pdd.beta_r, dtype=float),
        phi_t=zeros_f if ris else np.asarray(pdd.phi_t, dtype=float),
        phi_r=np.asarray(pdd.phi_r, dtype=float),
        lam_t=zeros_c if ris else np.ascontiguousarray(pdd.lam_t),
        lam_r=np.ascontiguousarray(pdd.lam_r),
        rho=pdd.rho,
        varpi=np.asarray(state.wmmse.varpi, dtype=float),
        nu=np.ascontiguousarray(state.wmmse.nu, dtype=np.complex128),
        mu_hint=0.0)

    T = np.ascontiguousarray(cascade_matrices(channels))
    sides = channels.user_sides
    sigma2 = pdd.sigma2
    gamma = opts.penalty_weight(st.rho)
    g = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)
    entry_obj = _objective(st, g, sigma2, gamma, ris)

    trace = []

    class _Tap:
        wants_blocks = False

        def block_value(self, outer_idx, st_, obj):
            # descent objective: monotone over cycles by exact block minimization
            trace.append(obj - float(np.sum(np.log(st_.varpi))))

        def dump(self):
            return None

    entry_descent = entry_obj - float(np.sum(np.log(st.varpi)))
    g, obj, descent, cycles = _run_inner(st, T, sides, sigma2, float(p_max),
                                         opts, ris, g, entry_descent,
                                         recorder=_Tap())
    new_state = SolverState(
        W=st.W,
        coeff=_make_coeff(st, ris),
        wmmse=WmmseState(varpi=st.varpi, nu=st.nu),
        pdd=PddState(
            aux_r=st.aux_r, beta_r=st.beta_r, phi_r=st.phi_r, lam_r=st.lam_r,
            rho=st.rho, sigma2=sigma2,
            aux_t=None if ris else st.aux_t,
            beta_t=None if ris else st.beta_t,
            phi_t=None if ris else st.phi_t,
            lam_t=None if ris else st.lam_t))
    return new_state, np.asarray(trace)


def _make_coeff(st: _Arrays, ris: bool) -> SurfaceCoefficients:
    if ris:
        return SurfaceCoefficients(theta_r=st.theta_r.copy())
    return SurfaceCoefficients(theta_r=st.theta_r.copy(), theta_t=st.theta_t.copy())


def _feasible_coeff(st: _Arrays, ris: bool) -> SurfaceCoefficients:
    """Constraint-satisfying coefficients built from the auxiliary copies."""
    if ris:
        return SurfaceCoefficients(
            theta_r=st.aux_r.copy(), beta_r=st.beta_r.copy(), phi_r=st.phi_r.copy())
    return SurfaceCoefficients(
        theta_r=st.aux_r.copy(), theta_t=st.aux_t.copy(),
        beta_r=st.beta_r.copy(), beta_t=st.beta_t.copy(),
        phi_r=st.phi_r.copy(), phi_t=st.phi_t.copy())


def solve(channels: ChannelSet, p_max: float, noise_power, opts: SolverOptions,
          seed, record_blocks: bool = False) -> OptimizationResult:
    """Full alternating optimization for one channel realization.

    ``noise_power`` is a scalar or per-user vector of linear noise powers;
    ``seed`` feeds the random initialization (an int or a Generator). The
    returned coefficients are the auxiliary copies, which satisfy the
    surface constraints exactly; the reported rates are evaluated there.
    """
    if p_max <= 0:
        raise ValueError("power budget must be positive")
    ris = opts.mode == MODE_RIS
    sides = channels.user_sides
    if ris and np.any(sides != 0):
        raise ValueError("reflect-only mode requires every user on the "
                         "reflection side; check the surface orientation")
    k, n = channels.h_surface_user.shape
    m = channels.h_bs_surface.shape[1]
    sigma2 = np.ascontiguousarray(
        np.broadcast_to(np.asarray(noise_power, dtype=float), (k,)))
    if np.any(sigma2 <= 0):
        raise ValueError("noise power must be positive")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    st = _init_arrays(n, m, k, p_max, ris, opts.penalty_init, rng)
    T = np.ascontiguousarray(cascade_matrices(channels))

    recorder = _BlockRecorder() if record_blocks else None
    g = kernels.effective_gains(T, st.W, st.theta_t, st.theta_r, sides)

    trace_obj, trace_sr, trace_viol, trace_rho, trace_cycles = [], [], [], [], []
    prev_violation = np.inf
    prev_sr = None
    total_cycles = 0
    status = "max_iterations"
    outer_done = 0

    for outer in range(opts.max_outer):
        entry_obj = _objective(st, g, sigma2, opts.penalty_weight(st.rho), ris)
        entry_descent = entry_obj - float(np.sum(np.log(st.varpi)))
        g, obj, _, cycles = _run_inner(st, T, sides, sigma2, p_max, opts, ris,
                                       g, entry_descent, recorder=recorder,
                                       outer_idx=outer)
        total_cycles += cycles
        outer_done = outer + 1

        viol = float(np.max(np.abs(st.aux_r - st.theta_r)))
        if not ris:
            viol = max(viol, float(np.max(np.abs(st.aux_t - st.theta_t))))
        g_feas = kernels.effective_gains(T, st.W, st.aux_t, st.aux_r, sides)
        _, _, rates = kernels.wmmse_update(g_feas, sigma2)
        sr = float(np.sum(rates))

        trace_obj.append(obj)
        trace_sr.append(sr)
        trace_viol.append(viol)
        trace_rho.append(st.rho)
        trace_cycles.append(cycles)

        if (viol <= opts.eps_violation and prev_sr is not None
                and abs(sr - prev_sr) <= opts.eps_inner * max(1.0, abs(prev_sr))):
            status = "converged"
            break
        prev_sr = sr

        # dual step when the violation improved, penalty shrink otherwise
        if viol <= 0.9 * prev_violation:
            st.lam_r = st.lam_r + (st.aux_r - st.theta_r) / st.rho
            if not ris:
                st.lam_t = st.lam_t + (st.aux_t - st.theta_t) / st.rho
        else:
            st.rho = opts.penalty_shrink * st.rho
        prev_violation = viol

    coeff = _feasible_coeff(st, ris)
    g_final = kernels.effective_gains(
        T, st.W, np.zeros(n, dtype=np.complex128) if ris else st.aux_t,
        st.aux_r, sides)
    _, _, rates = kernels.wmmse_update(g_final, sigma2)
    power = float(np.sum(np.abs(st.W) ** 2))
    residuals = {
        "power_slack": p_max - power,
        "pdd_violation": trace_viol[-1],
        "energy_split": coeff.energy_split_residual(),
        "coupling": coeff.coupling_residual(),
    }
    return OptimizationResult(
        W=st.W,
        coeff=coeff,
        per_user_rates=rates,
        sum_rate=float(np.sum(rates)),
        trace={
            "objective": np.asarray(trace_obj),
            "sum_rate": np.asarray(trace_sr),
            "violation": np.asarray(trace_viol),
            "rho": np.asarray(trace_rho),
            "inner_cycles": np.asarray(trace_cycles, dtype=int),
        },
        residuals=residuals,
        inner_iterations=total_cycles,
        outer_iterations=outer_done,
        status=status,
        mode=opts.mode,
        block_trace=recorder.dump() if recorder else None,
    )


def random_phase_baseline(channels: ChannelSet, p_max: float, noise_power,
                          mode: str, seed) -> float:
    """Sum rate of matched-direction, equal-power precoding over a random
    feasible surface configuration; reference point for solver gains."""
    ris = mode == MODE_RIS
    k, n = channels.h_surface_user.shape
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if ris:
        theta_r = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
        coeff = SurfaceCoefficients(theta_r=theta_r)
    else:
        phi_t = rng.uniform(-np.pi, np.pi, n)
        coeff = SurfaceCoefficients(
            theta_r=np.exp(1j * (phi_t - np.pi / 2)) / np.sqrt(2.0),
            theta_t=np.exp(1j * phi_t) / np.sqrt(2.0))
    T = np.ascontiguousarray(cascade_matrices(channels))
    theta_t, theta_r = _coeff_arrays(coeff)
    h_eff = kernels.effective_channels(T, theta_t, theta_r, channels.user_sides)
    norms = np.linalg.norm(h_eff, axis=0)
    W = np.zeros_like(h_eff)
    nz = norms > 0
    W[:, nz] = h_eff[:, nz] / norms[nz]
    W *= np.sqrt(p_max / k)
    sigma2 = np.broadcast_to(np.asarray(noise_power, dtype=float), (k,))
    g = kernels.effective_gains(T, W, theta_t, theta_r, channels.user_sides)
    _, _, rates = kernels.wmmse_update(g, np.ascontiguousarray(sigma2))
    return float(np.sum(rates))
