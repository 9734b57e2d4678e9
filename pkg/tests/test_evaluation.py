import numpy as np
import pytest

from aerisim.evaluation import (SurfaceCoefficients, augmented_objective,
                                effective_gains, mse_vector, sum_rate,
                                user_rates)
from aerisim.optimizer import PddState, update_receivers, update_weights

from conftest import manual_channel_set


def random_pdd(rng, n, sigma2, ris=False, rho=0.8):
    phi_t = rng.uniform(-np.pi, np.pi, n)
    psi = rng.uniform(0, np.pi / 2, n)
    beta_t, beta_r = np.sin(psi), np.cos(psi)
    if ris:
        beta_t = np.zeros(n)
        beta_r = np.ones(n)
        phi_r = rng.uniform(-np.pi, np.pi, n)
        return PddState(aux_r=beta_r * np.exp(1j * phi_r), beta_r=beta_r,
                        phi_r=phi_r, lam_r=_crandn(rng, n), rho=rho,
                        sigma2=np.asarray(sigma2))
    phi_r = phi_t - np.pi / 2
    return PddState(
        aux_r=beta_r * np.exp(1j * phi_r), beta_r=beta_r, phi_r=phi_r,
        lam_r=_crandn(rng, n), rho=rho, sigma2=np.asarray(sigma2),
        aux_t=beta_t * np.exp(1j * phi_t), beta_t=beta_t, phi_t=phi_t,
        lam_t=_crandn(rng, n))


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestEffectiveGains:
    def test_scalar_chain(self):
        ch = manual_channel_set([[2.0]], [[1.0]])
        coeff = SurfaceCoefficients(theta_r=np.array([1.0 + 0j]))
        g = effective_gains(coeff, ch, np.array([[3.0 + 0j]]))
        assert g[0, 0] == pytest.approx(6.0)

    def test_zero_coefficients_kill_gains(self, rng):
        ch = manual_channel_set(_crandn(rng, 4, 3), _crandn(rng, 2, 4))
        coeff = SurfaceCoefficients(theta_r=np.zeros(4, dtype=complex))
        g = effective_gains(coeff, ch, _crandn(rng, 3, 2))
        np.testing.assert_allclose(g, 0.0)

    def test_two_algebraic_forms_agree(self, rng):
        n, m, k = 6, 4, 3
        H = _crandn(rng, n, m)
        hs = _crandn(rng, k, n)
        W = _crandn(rng, m, k)
        theta = _crandn(rng, n)
        ch = manual_channel_set(H, hs)
        coeff = SurfaceCoefficients(theta_r=theta)
        g = effective_gains(coeff, ch, W)
        for kk in range(k):
            for j in range(k):
                direct = hs[kk].conj() @ np.diag(theta) @ H @ W[:, j]
                via_diag = theta @ np.diag(hs[kk].conj()) @ H @ W[:, j]
                assert abs(g[kk, j] - direct) < 1e-12 * max(1.0, abs(direct))
                assert abs(direct - via_diag) < 1e-12 * max(1.0, abs(direct))

    def test_dimension_mismatch_rejected(self, rng):
        ch = manual_channel_set(_crandn(rng, 4, 3), _crandn(rng, 2, 4))
        coeff = SurfaceCoefficients(theta_r=_crandn(rng, 4))
        with pytest.raises(ValueError, match="antenna count"):
            effective_gains(coeff, ch, _crandn(rng, 5, 2))


class TestUserRates:
    def test_unit_snr_gives_one_bit(self):
        g = np.array([[np.sqrt(2.0) + 0j]])
        assert user_rates(g, 2.0)[0] == pytest.approx(1.0)

    def test_zero_direct_gain(self):
        g = np.array([[0.0, 1.0], [0.5, 2.0]], dtype=complex)
        assert user_rates(g, 1.0)[0] == 0.0

    def test_symmetric_gains_equal_rates(self):
        g = np.array([[3.0, 1.0], [1.0, 3.0]], dtype=complex)
        r = user_rates(g, 0.5)
        assert r[0] == pytest.approx(r[1])

    def test_nonnegative(self, rng):
        for _ in range(50):
            g = _crandn(rng, 4, 4)
            assert np.all(user_rates(g, 0.3) >= 0.0)

    def test_joint_scaling_invariance(self, rng):
        g = _crandn(rng, 3, 3)
        W_scale = 7.5
        base = user_rates(g, 2.0)
        scaled = user_rates(np.sqrt(W_scale) * g, W_scale * 2.0)
        np.testing.assert_allclose(base, scaled, rtol=1e-12)


class TestMse:
    def test_zero_receiver(self, rng):
        g = _crandn(rng, 3, 3)
        e = mse_vector(g, np.zeros(3, dtype=complex), 1.0)
        np.testing.assert_allclose(e, 1.0)

    def test_scalar_hand_minimized(self):
        g = np.array([[2.0 + 0j]])
        e = mse_vector(g, np.array([0.4 + 0j]), 1.0)
        assert e[0] == pytest.approx(0.2)

    def test_lower_bound_at_minimizer(self, rng):
        for _ in range(100):
            g = _crandn(rng, 3, 3)
            sigma2 = rng.uniform(0.1, 2.0, 3)
            nu = _crandn(rng, 3)
            e = mse_vector(g, nu, sigma2)
            total = (np.abs(g) ** 2).sum(axis=1) + sigma2
            bound = 1.0 - np.abs(np.diag(g)) ** 2 / total
            assert np.all(e >= bound - 1e-12)

    def test_mmse_identities(self, rng):
        for _ in range(100):
            g = _crandn(rng, 4, 4) * rng.uniform(0.1, 100)
            sigma2 = rng.uniform(1e-4, 1.0, 4)
            varpi = update_weights(g, sigma2)
            nu = update_receivers(g, sigma2)
            e = mse_vector(g, nu, sigma2)
            np.testing.assert_allclose(varpi * e, 1.0, atol=1e-9)
            np.testing.assert_allclose(e, 1.0 / varpi, atol=1e-9)
            rates = user_rates(g, sigma2)
            assert abs(np.sum(np.log2(varpi)) - np.sum(rates)) <= 1e-9


class TestAugmentedObjective:
    def test_zero_penalty_at_consensus(self, rng):
        n, k = 5, 3
        g = _crandn(rng, k, k)
        sigma2 = np.full(k, 0.5)
        pdd = random_pdd(rng, n, sigma2)
        pdd.lam_t[:] = 0
        pdd.lam_r[:] = 0
        coeff = SurfaceCoefficients(theta_r=pdd.aux_r.copy(),
                                    theta_t=pdd.aux_t.copy())
        varpi = update_weights(g, sigma2)
        nu = update_receivers(g, sigma2)
        e = mse_vector(g, nu, sigma2)
        obj = augmented_objective(varpi, e, coeff, pdd)
        assert obj == pytest.approx(float(np.dot(varpi, e)), rel=1e-12)

    def test_unit_weights_zero_receivers(self, rng):
        n, k = 4, 3
        pdd = random_pdd(rng, n, np.full(k, 1.0))
        coeff = SurfaceCoefficients(theta_r=_crandn(rng, n), theta_t=_crandn(rng, n))
        g = _crandn(rng, k, k)
        e = mse_vector(g, np.zeros(k, dtype=complex), 1.0)
        obj = augmented_objective(np.ones(k), e, coeff, pdd)
        pen = obj - k
        manual = (np.sum(np.abs(pdd.aux_t - coeff.theta_t + pdd.rho * pdd.lam_t) ** 2)
                  + np.sum(np.abs(pdd.aux_r - coeff.theta_r + pdd.rho * pdd.lam_r) ** 2))
        assert pen == pytest.approx(manual / (2 * pdd.rho), rel=1e-12)

    def test_penalty_norm_identity(self, rng):
        n, k = 6, 2
        pdd = random_pdd(rng, n, np.full(k, 1.0))
        coeff = SurfaceCoefficients(theta_r=_crandn(rng, n), theta_t=_crandn(rng, n))
        varpi = np.ones(k)
        e = np.zeros(k)
        obj = augmented_objective(varpi, e, coeff, pdd)
        acc = 0.0
        for aux, th, lam in ((pdd.aux_t, coeff.theta_t, pdd.lam_t),
                             (pdd.aux_r, coeff.theta_r, pdd.lam_r)):
            v = aux - th + pdd.rho * lam
            acc += sum(x.real ** 2 + x.imag ** 2 for x in v)
        assert obj == pytest.approx(acc / (2 * pdd.rho), rel=1e-12)

    def test_literal_half_switch(self, rng):
        n, k = 4, 2
        pdd = random_pdd(rng, n, np.full(k, 1.0), rho=0.25)
        coeff = SurfaceCoefficients(theta_r=_crandn(rng, n), theta_t=_crandn(rng, n))
        varpi, e = np.ones(k), np.zeros(k)
        strict = augmented_objective(varpi, e, coeff, pdd)
        literal = augmented_objective(varpi, e, coeff, pdd, literal_half=True)
        # 1/(2 rho) = 2.0 vs literal 0.5: factor 4
        assert strict == pytest.approx(4.0 * literal, rel=1e-12)

    def test_sum_rate_helper(self, rng):
        g = _crandn(rng, 3, 3)
        assert sum_rate(g, 0.7) == pytest.approx(float(np.sum(user_rates(g, 0.7))))
