"""Vectorized numpy implementations of the solver's hot kernels.

Twin of ``_kernels_numba``; the active set is chosen in ``kernels`` via the
AERISIM_NUMBA environment flag. All functions take plain arrays:

  T        (K, N, M) complex  per-user cascade diag(conj(h_k)) @ H
  W        (M, K)    complex  precoder columns
  theta_*  (N,)      complex  surface coefficients (t = transmission side)
  sides    (K,)      int8     0 = reflection, 1 = transmission
  sigma2   (K,)      float    per-user noise power

``ris_mode`` pins the reflect-only specialization: the transmission-side
arrays are carried as zeros and skipped.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def _select_theta(theta_t, theta_r, sides):
    return np.where(sides[:, None] == 1, theta_t[None, :], theta_r[None, :])


def effective_gains(T, W, theta_t, theta_r, sides):
    """K x K gain matrix g[k, j] = theta_{side(k)}^T T[k] w_j."""
    B = np.einsum("knm,mj->knj", T, W)
    th = _select_theta(theta_t, theta_r, sides)
    return np.einsum("kn,knj->kj", th, B)


def effective_channels(T, theta_t, theta_r, sides):
    """M x K effective downlink channels, h_eff[:, k] = conj(T[k]^T theta)."""
    th = _select_theta(theta_t, theta_r, sides)
    return np.conj(np.einsum("kn,knm->km", th, T)).T.copy()


def wmmse_update(g, sigma2):
    """Weights, receivers and rates from the current gain matrix.

    The interference term sums |g[k, j]|^2 off the diagonal explicitly so
    no cancellation occurs when the direct gain dominates.
    """
    p = np.abs(g) ** 2
    diag = np.diag(p).copy()
    off = p.copy()
    np.fill_diagonal(off, 0.0)
    interf = off.sum(axis=1) + sigma2
    total = interf + diag
    sinr = diag / interf
    varpi = 1.0 + sinr
    nu = np.conj(np.diag(g)) / total
    rates = np.log2(1.0 + sinr)
    return varpi, nu, rates


def mse_vector(g, nu, sigma2):
    """Per-user mean square error for given receivers.

    Computed as |1 - nu g_kk|^2 + |nu|^2 (interference + noise): a sum of
    nonnegative terms, so tiny errors survive the huge-SINR regime where
    the textbook expansion cancels catastrophically.
    """
    p = np.abs(g) ** 2
    off = p.copy()
    np.fill_diagonal(off, 0.0)
    leak = off.sum(axis=1) + sigma2
    mismatch = np.abs(1.0 - nu * np.diag(g)) ** 2
    return mismatch + (np.abs(nu) ** 2) * leak


def precoder_update(h_eff, varpi, nu, p_max, bis_tol, mu_hint):
    """Weighted-MSE optimal precoder under the total power budget.

    Solves the regularized normal equations, with the multiplier found by
    bisection when the unconstrained solution exceeds the budget. Returns
    (W, mu).
    """
    m = h_eff.shape[0]
    coef = varpi * np.abs(nu) ** 2
    A = (h_eff * coef[None, :]) @ h_eff.conj().T
    rhs = h_eff * (varpi * np.conj(nu))[None, :]

    W = np.linalg.pinv(A) @ rhs
    power = float(np.sum(np.abs(W) ** 2))
    if power <= p_max:
        return W, 0.0

    eye = np.eye(m, dtype=np.complex128)

    def solve_at(mu):
        Wm = np.linalg.solve(A + mu * eye, rhs)
        return Wm, float(np.sum(np.abs(Wm) ** 2))

    lo = 0.0
    hi = mu_hint if mu_hint > 0.0 else 1.0
    W, power = solve_at(hi)
    guard = 0
    while power > p_max and guard < 400:
        lo = hi
        hi *= 2.0
        W, power = solve_at(hi)
        guard += 1

    mu = hi
    for _ in range(200):
        if abs(power - p_max) <= bis_tol * p_max:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        W_mid, p_mid = solve_at(mid)
        if p_mid > p_max:
            lo = mid
        else:
            hi = mid
            W, power, mu = W_mid, p_mid, mid
    return W, mu


def surface_update(T, W, varpi, nu, sides, aux_t, aux_r, lam_t, lam_r,
                   rho, gamma, ris_mode):
    """Exact minimizer of the weighted MSE plus penalty over each side's
    coefficient vector; the penalty term keeps both systems positive
    definite. Sides with no assigned users reduce to the penalty anchor."""
    n = T.shape[1]
    B = np.einsum("knm,mj->knj", T, W)  # B[k, :, j] = T[k] w_j
    coef = varpi * np.abs(nu) ** 2
    lin = varpi * np.conj(nu)
    eye = np.eye(n, dtype=np.complex128)

    out = []
    for side, aux, lam in ((1, aux_t, lam_t), (0, aux_r, lam_r)):
        if ris_mode and side == 1:
            out.append(np.zeros(n, dtype=np.complex128))
            continue
        mask = sides == side
        anchor = gamma * (aux + rho * lam)
        if not np.any(mask):
            out.append(anchor / gamma)
            continue
        Bs = B[mask]
        Q = np.einsum("knj,kmj->nm", np.conj(Bs) * coef[mask, None, None], Bs)
        akk = B[mask, :, mask]  # (Ki, N) rows a_kk for the selected users
        c = (np.conj(akk) * lin[mask, None]).sum(axis=0) + anchor
        out.append(np.linalg.solve(Q + gamma * eye, c))
    return out[0], out[1]


def _psi_from_xi(xi):
    psi = np.where(xi < -np.pi / 2, -np.pi / 2 - xi,
                   np.where(xi < np.pi / 4, 0.0, np.pi / 2))
    return psi


def aux_amplitude_update(vt_t, vt_r, phi_t, phi_r, ris_mode):
    """Coupled amplitude split minimizing the penalty's linear term.

    ``vt_i`` is the penalty anchor rho*lam_i - theta_i. The per-element
    objective is sin(psi) * p + cos(psi) * q over psi in [0, pi/2] with
    p, q the phase-aligned real parts of the two sides' anchors.
    """
    n = vt_r.shape[0]
    if ris_mode:
        return np.zeros(n), np.ones(n)
    p = np.real(np.exp(-1j * phi_t) * vt_t)
    q = np.real(np.exp(-1j * phi_r) * vt_r)
    psi = _psi_from_xi(np.arctan2(q, p))
    return np.sin(psi), np.cos(psi)


def aux_phase_update(vt_t, vt_r, beta_t, beta_r, ris_mode):
    """Quadrature-coupled phases minimizing the penalty's linear term.

    Evaluates both +-pi/2 coupling branches at their per-branch optima and
    keeps the better element by element.
    """
    n = vt_r.shape[0]
    if ris_mode:
        phi_r = np.angle(vt_r) + np.pi
        phi_r = np.mod(phi_r + np.pi, TWO_PI) - np.pi
        return np.zeros(n), phi_r

    m_t = beta_t * vt_t
    m_r = beta_r * vt_r
    w_plus = m_t + 1j * m_r
    w_minus = m_t - 1j * m_r

    # branch A: phi_r = phi_t + pi/2; branch B: phi_r = phi_t - pi/2
    phi_t_a = np.angle(w_minus) + np.pi
    phi_r_a = phi_t_a + np.pi / 2
    phi_t_b = np.angle(w_plus) + np.pi
    phi_r_b = phi_t_b - np.pi / 2

    def value(pt, pr):
        return beta_t * np.real(np.exp(-1j * pt) * vt_t) \
            + beta_r * np.real(np.exp(-1j * pr) * vt_r)

    pick_a = value(phi_t_a, phi_r_a) <= value(phi_t_b, phi_r_b)
    phi_t = np.where(pick_a, phi_t_a, phi_t_b)
    phi_r = np.where(pick_a, phi_r_a, phi_r_b)
    phi_t = np.mod(phi_t + np.pi, TWO_PI) - np.pi
    phi_r = np.mod(phi_r + np.pi, TWO_PI) - np.pi
    return phi_t, phi_r


def penalty_value(theta_t, theta_r, aux_t, aux_r, lam_t, lam_r,
                  rho, gamma, ris_mode):
    """Quadratic penalty tying the auxiliary copies to the coefficients."""
    total = np.sum(np.abs(aux_r - theta_r + rho * lam_r) ** 2)
    if not ris_mode:
        total += np.sum(np.abs(aux_t - theta_t + rho * lam_t) ** 2)
    return gamma * float(total)
