"""Numba-jitted implementations of the solver's hot kernels.

Loop-oriented twin of ``_kernels_numpy`` with identical signatures and
semantics; see that module for the array contracts. Compiled lazily with
on-disk caching so repeated runs skip JIT cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi


@njit(cache=True)
def _select_theta_row(theta_t, theta_r, side_k):
    if side_k == 1:
        return theta_t
    return theta_r


@njit(cache=True)
def effective_gains(T, W, theta_t, theta_r, sides):
    k_users = T.shape[0]
    g = np.empty((k_users, k_users), dtype=np.complex128)
    for k in range(k_users):
        th = _select_theta_row(theta_t, theta_r, sides[k])
        bk = T[k] @ W  # (N, K)
        g[k, :] = np.dot(th, bk)
    return g


@njit(cache=True)
def effective_channels(T, theta_t, theta_r, sides):
    k_users, _, m = T.shape
    h_eff = np.empty((m, k_users), dtype=np.complex128)
    for k in range(k_users):
        th = _select_theta_row(theta_t, theta_r, sides[k])
        v = np.dot(th, T[k])  # (M,)
        h_eff[:, k] = np.conj(v)
    return h_eff


@njit(cache=True)
def wmmse_update(g, sigma2):
    k_users = g.shape[0]
    varpi = np.empty(k_users)
    nu = np.empty(k_users, dtype=np.complex128)
    rates = np.empty(k_users)
    for k in range(k_users):
        interf = sigma2[k]
        for j in range(k_users):
            if j != k:
                interf += abs(g[k, j]) ** 2
        diag = abs(g[k, k]) ** 2
        sinr = diag / interf
        varpi[k] = 1.0 + sinr
        nu[k] = np.conj(g[k, k]) / (interf + diag)
        rates[k] = np.log2(1.0 + sinr)
    return varpi, nu, rates


@njit(cache=True)
def mse_vector(g, nu, sigma2):
    # |1 - nu g_kk|^2 + |nu|^2 (interference + noise): nonnegative terms
    # only, stable where the textbook expansion cancels catastrophically.
    k_users = g.shape[0]
    e = np.empty(k_users)
    for k in range(k_users):
        leak = sigma2[k]
        for j in range(k_users):
            if j != k:
                leak += abs(g[k, j]) ** 2
        e[k] = abs(1.0 - nu[k] * g[k, k]) ** 2 + abs(nu[k]) ** 2 * leak
    return e


@njit(cache=True)
def precoder_update(h_eff, varpi, nu, p_max, bis_tol, mu_hint):
    m, k_users = h_eff.shape
    A = np.zeros((m, m), dtype=np.complex128)
    rhs = np.empty((m, k_users), dtype=np.complex128)
    for k in range(k_users):
        ck = varpi[k] * abs(nu[k]) ** 2
        for i in range(m):
            for l in range(m):
                A[i, l] += ck * h_eff[i, k] * np.conj(h_eff[l, k])
        lk = varpi[k] * np.conj(nu[k])
        for i in range(m):
            rhs[i, k] = lk * h_eff[i, k]

    W = np.linalg.pinv(A) @ rhs
    power = np.sum(np.abs(W) ** 2)
    if power <= p_max:
        return W, 0.0

    eye = np.eye(m, dtype=np.complex128)
    lo = 0.0
    hi = mu_hint if mu_hint > 0.0 else 1.0
    W = np.linalg.solve(A + hi * eye, rhs)
    power = np.sum(np.abs(W) ** 2)
    guard = 0
    while power > p_max and guard < 400:
        lo = hi
        hi *= 2.0
        W = np.linalg.solve(A + hi * eye, rhs)
        power = np.sum(np.abs(W) ** 2)
        guard += 1

    mu = hi
    for _ in range(200):
        if abs(power - p_max) <= bis_tol * p_max:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        W_mid = np.linalg.solve(A + mid * eye, rhs)
        p_mid = np.sum(np.abs(W_mid) ** 2)
        if p_mid > p_max:
            lo = mid
        else:
            hi = mid
            W = W_mid
            power = p_mid
            mu = mid
    return W, mu


@njit(cache=True)
def surface_update(T, W, varpi, nu, sides, aux_t, aux_r, lam_t, lam_r,
                   rho, gamma, ris_mode):
    k_users, n, _ = T.shape
    theta_out_t = np.zeros(n, dtype=np.complex128)
    theta_out_r = np.zeros(n, dtype=np.complex128)

    for side in range(2):
        if ris_mode and side == 1:
            continue
        if side == 1:
            aux, lam = aux_t, lam_t
        else:
            aux, lam = aux_r, lam_r
        Q = np.zeros((n, n), dtype=np.complex128)
        c = np.empty(n, dtype=np.complex128)
        for i in range(n):
            c[i] = gamma * (aux[i] + rho * lam[i])
        found = False
        for k in range(k_users):
            if sides[k] != side:
                continue
            found = True
            bk = T[k] @ W  # columns a_kj
            ck = varpi[k] * abs(nu[k]) ** 2
            lk = varpi[k] * np.conj(nu[k])
            for j in range(k_users):
                for a in range(n):
                    ca = np.conj(bk[a, j])
                    for b in range(n):
                        Q[a, b] += ck * ca * bk[b, j]
            for a in range(n):
                c[a] += lk * np.conj(bk[a, k])
        if found:
            for i in range(n):
                Q[i, i] += gamma
            theta = np.linalg.solve(Q, c)
        else:
            theta = c / gamma
        if side == 1:
            theta_out_t = theta
        else:
            theta_out_r = theta
    return theta_out_t, theta_out_r


@njit(cache=True)
def aux_amplitude_update(vt_t, vt_r, phi_t, phi_r, ris_mode):
    n = vt_r.shape[0]
    beta_t = np.zeros(n)
    beta_r = np.ones(n)
    if ris_mode:
        return beta_t, beta_r
    for i in range(n):
        zt = np.exp(-1j * phi_t[i]) * vt_t[i]
        zr = np.exp(-1j * phi_r[i]) * vt_r[i]
        xi = np.arctan2(zr.real, zt.real)
        if xi < -np.pi / 2:
            psi = -np.pi / 2 - xi
        elif xi < np.pi / 4:
            psi = 0.0
        else:
            psi = np.pi / 2
        beta_t[i] = np.sin(psi)
        beta_r[i] = np.cos(psi)
    return beta_t, beta_r


@njit(cache=True)
def _wrap_angle(x):
    return np.mod(x + np.pi, TWO_PI) - np.pi


@njit(cache=True)
def aux_phase_update(vt_t, vt_r, beta_t, beta_r, ris_mode):
    n = vt_r.shape[0]
    phi_t = np.zeros(n)
    phi_r = np.zeros(n)
    if ris_mode:
        for i in range(n):
            phi_r[i] = _wrap_angle(np.arctan2(vt_r[i].imag, vt_r[i].real) + np.pi)
        return phi_t, phi_r

    for i in range(n):
        w_plus = beta_t[i] * vt_t[i] + 1j * beta_r[i] * vt_r[i]
        w_minus = beta_t[i] * vt_t[i] - 1j * beta_r[i] * vt_r[i]
        pt_a = np.arctan2(w_minus.imag, w_minus.real) + np.pi
        pr_a = pt_a + np.pi / 2
        pt_b = np.arctan2(w_plus.imag, w_plus.real) + np.pi
        pr_b = pt_b - np.pi / 2
        f_a = beta_t[i] * (np.exp(-1j * pt_a) * vt_t[i]).real \
            + beta_r[i] * (np.exp(-1j * pr_a) * vt_r[i]).real
        f_b = beta_t[i] * (np.exp(-1j * pt_b) * vt_t[i]).real \
            + beta_r[i] * (np.exp(-1j * pr_b) * vt_r[i]).real
        if f_a <= f_b:
            phi_t[i] = _wrap_angle(pt_a)
            phi_r[i] = _wrap_angle(pr_a)
        else:
            phi_t[i] = _wrap_angle(pt_b)
            phi_r[i] = _wrap_angle(pr_b)
    return phi_t, phi_r


@njit(cache=True)
def penalty_value(theta_t, theta_r, aux_t, aux_r, lam_t, lam_r,
                  rho, gamma, ris_mode):
    n = theta_r.shape[0]
    total = 0.0
    for i in range(n):
        total += abs(aux_r[i] - theta_r[i] + rho * lam_r[i]) ** 2
    if not ris_mode:
        for i in range(n):
            total += abs(aux_t[i] - theta_t[i] + rho * lam_t[i]) ** 2
    return gamma * total
