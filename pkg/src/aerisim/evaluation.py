"""Objective evaluation: gains, rates, mean square errors, penalties.

Every objective value used by the optimizer and the tests flows through
this module so there is a single definition of each quantity. Rates are
log base 2, in bits/s/Hz; powers are linear milliwatts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelSet


@dataclass
class SurfaceCoefficients:
    """Per-element surface coefficients.

    ``theta_t`` is None in reflect-only mode. The amplitude/phase split is
    carried explicitly (``theta_i[n] = beta_i[n] * exp(1j phi_i[n])``) so
    constraint checks stay well defined when an amplitude hits zero.
    """

    theta_r: np.ndarray
    theta_t: np.ndarray | None = None
    beta_r: np.ndarray | None = None
    beta_t: np.ndarray | None = None
    phi_r: np.ndarray | None = None
    phi_t: np.ndarray | None = None

    @property
    def ris_mode(self) -> bool:
        return self.theta_t is None

    def energy_split_residual(self) -> float:
        """Max deviation from the per-element energy budget."""
        if self.ris_mode:
            return float(np.max(np.abs(np.abs(self.theta_r) - 1.0)))
        bt = self.beta_t if self.beta_t is not None else np.abs(self.theta_t)
        br = self.beta_r if self.beta_r is not None else np.abs(self.theta_r)
        return float(np.max(np.abs(bt**2 + br**2 - 1.0)))

    def coupling_residual(self) -> float:
        """Max |cos(phi_t - phi_r)|; zero means perfect quadrature."""
        if self.ris_mode:
            return 0.0
        pt = self.phi_t if self.phi_t is not None else np.angle(self.theta_t)
        pr = self.phi_r if self.phi_r is not None else np.angle(self.theta_r)
        return float(np.max(np.abs(np.cos(pt - pr))))


def _theta_pair(coeff: SurfaceCoefficients):
    theta_r = np.ascontiguousarray(coeff.theta_r, dtype=np.complex128)
    if coeff.ris_mode:
        theta_t = np.zeros_like(theta_r)
    else:
        theta_t = np.ascontiguousarray(coeff.theta_t, dtype=np.complex128)
    return theta_t, theta_r


def cascade_matrices(channels: ChannelSet) -> np.ndarray:
    """Per-user cascades T[k] = diag(conj(h_k)) @ H, shape (K, N, M)."""
    return np.conj(channels.h_surface_user)[:, :, None] * channels.h_bs_surface[None, :, :]


def effective_gains(coeff: SurfaceCoefficients, channels: ChannelSet,
                    W: np.ndarray, sides=None) -> np.ndarray:
    """K x K matrix g[k, j]: user k's response to user j's precoder."""
    sides = channels.user_sides if sides is None else np.asarray(sides, dtype=np.int8)
    T = cascade_matrices(channels)
    theta_t, theta_r = _theta_pair(coeff)
    W = np.ascontiguousarray(W, dtype=np.complex128)
    if W.shape[0] != channels.h_bs_surface.shape[1]:
        raise ValueError(f"precoder rows {W.shape[0]} != antenna count "
                         f"{channels.h_bs_surface.shape[1]}")
    return kernels.effective_gains(T, W, theta_t, theta_r, sides)


def user_rates(g: np.ndarray, sigma2) -> np.ndarray:
    """Achievable rate per user from the gain matrix."""
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (g.shape[0],))
    p = np.abs(g) ** 2
    diag = np.diag(p).copy()
    off = p.copy()
    np.fill_diagonal(off, 0.0)
    interf = off.sum(axis=1) + sigma2
    return np.log2(1.0 + diag / interf)


def sum_rate(g: np.ndarray, sigma2) -> float:
    return float(np.sum(user_rates(g, sigma2)))


def mse_vector(g: np.ndarray, nu: np.ndarray, sigma2) -> np.ndarray:
    """Mean square error per user for the given receivers."""
    sigma2 = np.ascontiguousarray(
        np.broadcast_to(np.asarray(sigma2, dtype=float), (g.shape[0],)))
    return kernels.mse_vector(np.ascontiguousarray(g, dtype=np.complex128),
                              np.ascontiguousarray(nu, dtype=np.complex128),
                              sigma2)


def augmented_objective(varpi: np.ndarray, e: np.ndarray,
                        coeff: SurfaceCoefficients, pdd,
                        literal_half: bool = False) -> float:
    """Weighted MSE plus the quadratic penalty on the auxiliary copies.

    The penalty weight is 1/(2 rho) so a shrinking rho tightens the
    equality between the coefficients and their auxiliary copies;
    ``literal_half`` switches to a fixed 1/2 weight for comparison.
    """
    if pdd.rho <= 0:
        raise ValueError("penalty factor must be positive")
    gamma = 0.5 if literal_half else 1.0 / (2.0 * pdd.rho)
    theta_t, theta_r = _theta_pair(coeff)
    aux_t = pdd.aux_t if pdd.aux_t is not None else np.zeros_like(theta_t)
    lam_t = pdd.lam_t if pdd.lam_t is not None else np.zeros_like(theta_t)
    pen = kernels.penalty_value(theta_t, theta_r,
                                np.ascontiguousarray(aux_t, dtype=np.complex128),
                                np.ascontiguousarray(pdd.aux_r, dtype=np.complex128),
                                np.ascontiguousarray(lam_t, dtype=np.complex128),
                                np.ascontiguousarray(pdd.lam_r, dtype=np.complex128),
                                float(pdd.rho), gamma, coeff.ris_mode)
    return float(np.dot(varpi, e)) + pen
