"""Rectified-Gaussian expectation: Monte-Carlo and finite-difference oracles."""

import numpy as np
import pytest

from randgame.hinge import (
    MarginMoments,
    hinge_expect,
    hinge_expect_dmu,
    hinge_expect_dvar,
    margin_moments,
)
from randgame.model import LearnerParams


class TestHingeExpect:
    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(0)
        n = 2_000_000
        for mu in (-2.0, -0.5, 0.0, 0.5, 2.0):
            for sigma in (0.1, 1.0, 3.0):
                draws = np.maximum(rng.normal(mu, sigma, size=n), 0.0)
                se = draws.std() / np.sqrt(n)
                assert abs(hinge_expect(mu, sigma) - draws.mean()) <= 4 * se + 1e-12

    def test_positive_mu_large_limit(self):
        # far from the kink the expectation is just mu
        assert hinge_expect(30.0, 1.0) == pytest.approx(30.0, abs=1e-12)

    def test_negative_mu_large_limit(self):
        assert hinge_expect(-30.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_at_zero_mean(self):
        # E[max(0, N(0, s^2))] = s / sqrt(2 pi)
        for s in (0.3, 1.0, 2.0):
            assert hinge_expect(0.0, s) == pytest.approx(s / np.sqrt(2 * np.pi), rel=1e-12)

    def test_vectorized_matches_scalar(self):
        mus = np.array([-1.0, 0.0, 2.0])
        sig = np.array([0.5, 1.0, 2.0])
        out = hinge_expect(mus, sig)
        for i in range(3):
            assert out[i] == pytest.approx(hinge_expect(mus[i], sig[i]), rel=1e-14)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            hinge_expect(0.0, 0.0)


class TestHingeDerivatives:
    def test_dmu_finite_difference(self):
        h = 1e-6
        for mu in (-1.5, -0.2, 0.0, 0.7, 2.0):
            for sigma in (0.2, 1.0, 3.0):
                fd = (hinge_expect(mu + h, sigma) - hinge_expect(mu - h, sigma)) / (2 * h)
                assert hinge_expect_dmu(mu, sigma) == pytest.approx(fd, abs=1e-8)

    def test_dvar_finite_difference(self):
        h = 1e-7
        for mu in (-1.5, 0.0, 0.7):
            for sigma in (0.5, 1.0, 2.0):
                v = sigma**2
                fd = (
                    hinge_expect(mu, np.sqrt(v + h)) - hinge_expect(mu, np.sqrt(v - h))
                ) / (2 * h)
                assert hinge_expect_dvar(mu, sigma) == pytest.approx(fd, abs=1e-7)

    def test_dmu_is_a_probability(self):
        rng = np.random.default_rng(1)
        p = hinge_expect_dmu(rng.normal(size=50), rng.uniform(0.1, 2.0, size=50))
        # deep tails saturate to exactly 0/1 in floating point
        assert np.all(p >= 0) and np.all(p <= 1)

    def test_dvar_strictly_positive(self):
        rng = np.random.default_rng(2)
        d = hinge_expect_dvar(rng.normal(size=50), rng.uniform(0.1, 2.0, size=50))
        assert np.all(d > 0)


class TestMarginMoments:
    def _random_setup(self, seed, k=4):
        rng = np.random.default_rng(seed)
        theta_l = LearnerParams(rng.normal(size=k + 1), rng.uniform(0.05, 0.4, size=k + 1))
        mu_x = rng.uniform(size=k)
        sigma_x = rng.uniform(0.05, 0.3, size=k)
        y = float(rng.choice([-1.0, 1.0]))
        return theta_l, mu_x, sigma_x, y

    def test_monte_carlo_oracle(self):
        n = 1_000_000
        for seed in range(5):
            theta_l, mu_x, sigma_x, y = self._random_setup(seed)
            rng = np.random.default_rng(100 + seed)
            k = mu_x.size
            w = rng.normal(theta_l.mu_tilde, theta_l.sigma_tilde, size=(n, k))
            b = rng.normal(theta_l.mu_b, theta_l.sigma_b, size=n)
            x = rng.normal(mu_x, sigma_x, size=(n, k))
            s = 1.0 - y * ((w * x).sum(axis=1) + b)
            mm = margin_moments("learner", y, theta_l, mu_x, sigma_x)
            se_mean = s.std() / np.sqrt(n)
            se_var = s.var() * np.sqrt(2.0 / (n - 1))
            assert abs(mm.mu - s.mean()) <= 4 * se_mean
            assert abs(mm.var - s.var()) <= 4 * se_var

    def test_sides_mirror(self):
        theta_l, mu_x, sigma_x, y = self._random_setup(9)
        a = margin_moments("learner", y, theta_l, mu_x, sigma_x)
        b = margin_moments("attacker", y, theta_l, mu_x, sigma_x)
        assert a.mu + b.mu == pytest.approx(2.0, rel=1e-14)
        assert a.var == pytest.approx(b.var, rel=1e-14)

    def test_rejects_unknown_side(self):
        theta_l, mu_x, sigma_x, y = self._random_setup(11)
        with pytest.raises(ValueError, match="side"):
            margin_moments("referee", y, theta_l, mu_x, sigma_x)

    def test_moments_dataclass_guards_variance(self):
        with pytest.raises(ValueError):
            MarginMoments(0.0, -1.0)
        assert MarginMoments(0.0, 4.0).sigma == 2.0
