"""Dual (kernelized) game: Gram matrices, moment formulas against Monte
Carlo, gradient blocks against finite differences, and the identity-kernel
reduction to the primal game."""

import numpy as np
import pytest

from randgame.costs import (
    attacker_cost,
    attacker_grad,
    learner_cost,
    learner_grad,
)
from randgame.kernel import (
    DualParams,
    Kernel,
    check_psd,
    default_dual_boxes,
    dual_costs_and_grads,
    dual_game_operator,
    dual_margin_moments,
    flatten_dual,
    gram,
    save_gram_csv,
    unflatten_dual,
)
from randgame.model import (
    AttackerParams,
    Dataset,
    GameSpec,
    LearnerParams,
    ShapeError,
    default_boxes,
)


def random_dual(seed, n=4):
    rng = np.random.default_rng(seed)
    return DualParams(
        mu_alpha=rng.normal(scale=0.5, size=n),
        sigma_alpha=rng.uniform(0.05, 0.3, size=n),
        mu_b=float(rng.normal(scale=0.3)),
        sigma_b=float(rng.uniform(0.05, 0.3)),
        mu_xi=rng.normal(scale=0.5, size=(n, n)),
        sigma_xi=rng.uniform(0.05, 0.3, size=(n, n)),
    )


def random_psd(seed, n=4):
    A = np.random.default_rng(seed).normal(size=(n, n))
    return A @ A.T / n + 0.1 * np.eye(n)


def random_dataset(seed, n=4, k=3):
    rng = np.random.default_rng(seed)
    y = rng.choice([-1.0, 1.0], size=n)
    if np.all(y == y[0]):
        y[0] = -y[0]
    return Dataset(rng.uniform(size=(n, k)), y)


class TestGram:
    def test_linear_gram_is_inner_products(self):
        ds = random_dataset(0)
        K = gram(ds, Kernel("linear"))
        np.testing.assert_allclose(K, ds.features @ ds.features.T, atol=1e-15)

    def test_rbf_gram_unit_diagonal(self):
        ds = random_dataset(1)
        K = gram(ds, Kernel("rbf", gamma=2.0))
        np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-15)
        assert np.all(K > 0) and np.all(K <= 1.0 + 1e-15)

    def test_rbf_gram_entry(self):
        ds = random_dataset(2)
        K = gram(ds, Kernel("rbf", gamma=1.5))
        d2 = np.sum((ds.features[0] - ds.features[1]) ** 2)
        assert K[0, 1] == pytest.approx(np.exp(-1.5 * d2), rel=1e-12)

    def test_gram_symmetric_and_psd(self):
        for kind, gamma in (("linear", 1.0), ("rbf", 0.7)):
            ds = random_dataset(3, n=6)
            K = gram(ds, Kernel(kind, gamma))
            np.testing.assert_allclose(K, K.T, atol=0)
            check_psd(K)

    def test_check_psd_rejects_indefinite(self):
        with pytest.raises(ValueError, match="PSD"):
            check_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_kernel_validation(self):
        with pytest.raises(ValueError):
            Kernel("polynomial")
        with pytest.raises(ValueError):
            Kernel("rbf", gamma=-1.0)

    def test_save_gram_csv(self, tmp_path):
        K = random_psd(4)
        p = tmp_path / "gram.csv"
        save_gram_csv(p, K)
        np.testing.assert_allclose(np.loadtxt(p, delimiter=","), K, atol=0)


class TestDualParams:
    def test_flatten_roundtrip(self):
        dual = random_dual(5)
        back = unflatten_dual(flatten_dual(dual), dual.n)
        for name in ("mu_alpha", "sigma_alpha", "mu_xi", "sigma_xi"):
            np.testing.assert_array_equal(getattr(dual, name), getattr(back, name))
        assert back.mu_b == dual.mu_b and back.sigma_b == dual.sigma_b

    def test_rejects_nonpositive_deviations(self):
        with pytest.raises(ValueError):
            DualParams(np.zeros(2), np.array([0.1, 0.0]), 0.0, 0.1, np.zeros((2, 2)), np.full((2, 2), 0.1))

    def test_unflatten_rejects_wrong_length(self):
        with pytest.raises(ShapeError):
            unflatten_dual(np.zeros(11), n=2)


class TestDualMoments:
    def test_monte_carlo_oracle(self):
        n_draws = 1_000_000
        for seed in range(5):
            dual = random_dual(seed)
            K = random_psd(30 + seed)
            rng = np.random.default_rng(60 + seed)
            y = 1.0 if seed % 2 else -1.0
            i = seed % dual.n
            a = rng.normal(dual.mu_alpha, dual.sigma_alpha, size=(n_draws, dual.n))
            b = rng.normal(dual.mu_b, dual.sigma_b, size=n_draws)
            xi = rng.normal(dual.mu_xi[i], dual.sigma_xi[i], size=(n_draws, dual.n))
            s = 1.0 - y * (np.einsum("ij,jk,ik->i", a, K, xi) + b)
            mm = dual_margin_moments(
                "learner", y, dual.mu_alpha, dual.sigma_alpha, dual.mu_b,
                dual.sigma_b, dual.mu_xi[i], dual.sigma_xi[i], K,
            )
            assert abs(mm.mu - s.mean()) <= 4 * s.std() / np.sqrt(n_draws)
            assert abs(mm.var - s.var()) <= 4 * s.var() * np.sqrt(2.0 / (n_draws - 1))

    def test_sides_mirror(self):
        dual = random_dual(8)
        K = random_psd(9)
        args = (
            dual.mu_alpha, dual.sigma_alpha, dual.mu_b, dual.sigma_b,
            dual.mu_xi[0], dual.sigma_xi[0], K,
        )
        a = dual_margin_moments("learner", 1.0, *args)
        b = dual_margin_moments("attacker", 1.0, *args)
        assert a.mu + b.mu == pytest.approx(2.0, rel=1e-14)
        assert a.var == pytest.approx(b.var, rel=1e-14)


class TestDualGradients:
    def _fd(self, f, v, h=1e-6):
        g = np.empty_like(v)
        for i in range(v.size):
            vp = v.copy(); vp[i] += h
            vm = v.copy(); vm[i] -= h
            g[i] = (f(vp) - f(vm)) / (2 * h)
        return g

    def test_all_blocks_vs_fd(self):
        for seed in range(5):
            n = 4
            dual = random_dual(seed, n)
            K = random_psd(40 + seed, n)
            y = np.random.default_rng(80 + seed).choice([-1.0, 1.0], size=n)
            v = flatten_dual(dual)
            _, _, g = dual_costs_and_grads(dual, K, 2.0, 3.0, y, bias_reg=0.5)

            def cl(vv):
                c, _, _ = dual_costs_and_grads(unflatten_dual(vv, n), K, 2.0, 3.0, y, 0.5)
                return c

            def cd(vv):
                _, c, _ = dual_costs_and_grads(unflatten_dual(vv, n), K, 2.0, 3.0, y, 0.5)
                return c

            fd_l = self._fd(cl, v)[: 2 * n + 2]
            fd_d = self._fd(cd, v)[2 * n + 2 :]
            analytic_l = np.concatenate(
                [g["d_mu_alpha"], [g["d_mu_b"]], g["d_sigma_alpha"], [g["d_sigma_b"]]]
            )
            analytic_d = np.hstack([g["d_mu_xi"], g["d_sigma_xi"]]).ravel()
            np.testing.assert_allclose(analytic_l, fd_l, rtol=1e-5, atol=1e-8)
            np.testing.assert_allclose(analytic_d, fd_d, rtol=1e-5, atol=1e-8)


class TestIdentityKernelReduction:
    """With orthonormal samples the linear-kernel Gram is the identity and the
    dual game must be coordinate-for-coordinate the primal game."""

    def _setup(self, seed=0, n=4):
        # samples = standard basis vectors, so K = X X^T = I exactly
        X = np.eye(n)
        y = np.array([1.0, -1.0, 1.0, -1.0])[:n]
        ds = Dataset(X, y)
        K = gram(ds, Kernel("linear"))
        np.testing.assert_array_equal(K, np.eye(n))
        dual = random_dual(seed, n)
        # primal counterpart: w~ <-> alpha, x_i <-> xi_i (same coordinates)
        theta_l = LearnerParams(
            np.concatenate([dual.mu_alpha, [dual.mu_b]]),
            np.concatenate([dual.sigma_alpha, [dual.sigma_b]]),
        )
        theta_d = AttackerParams(np.clip(dual.mu_xi, 0.0, 1.0), dual.sigma_xi)
        dual = DualParams(
            dual.mu_alpha, dual.sigma_alpha, dual.mu_b, dual.sigma_b,
            theta_d.mu_x, dual.sigma_xi,
        )
        lb, ab = default_boxes(n, n, W=2.0)
        game = GameSpec(ds, rho_l=2.0, rho_d=3.0, learner_box=lb, attacker_box=ab)
        return ds, K, dual, theta_l, theta_d, game

    def test_costs_match(self):
        ds, K, dual, theta_l, theta_d, game = self._setup()
        cl, cd, _ = dual_costs_and_grads(dual, K, game.rho_l, game.rho_d, ds.labels)
        assert cl == pytest.approx(learner_cost(theta_l, theta_d, game), abs=1e-12)
        assert cd == pytest.approx(attacker_cost(theta_l, theta_d, game), abs=1e-12)

    def test_gradients_match(self):
        ds, K, dual, theta_l, theta_d, game = self._setup(seed=1)
        _, _, g = dual_costs_and_grads(dual, K, game.rho_l, game.rho_d, ds.labels)
        d_mu_w, d_sigma_w = learner_grad(theta_l, theta_d, game)
        d_mu_x, d_sigma_x = attacker_grad(theta_l, theta_d, game)
        np.testing.assert_allclose(g["d_mu_alpha"], d_mu_w[:-1], atol=1e-12)
        assert g["d_mu_b"] == pytest.approx(d_mu_w[-1], abs=1e-12)
        np.testing.assert_allclose(g["d_sigma_alpha"], d_sigma_w[:-1], atol=1e-12)
        assert g["d_sigma_b"] == pytest.approx(d_sigma_w[-1], abs=1e-12)
        np.testing.assert_allclose(g["d_mu_xi"], d_mu_x, atol=1e-12)
        np.testing.assert_allclose(g["d_sigma_xi"], d_sigma_x, atol=1e-12)


class TestDualOperator:
    def test_operator_dims_and_defaults(self):
        ds = random_dataset(6, n=3)
        ops = dual_game_operator(ds, Kernel("rbf", 1.0), 1.0, 2.0)
        assert ops.dim_l == 2 * 3 + 2 and ops.dim_d == 2 * 9
        assert ops.r == (1.0, 0.5)

    def test_pseudo_grad_consistent_with_costs(self):
        ds = random_dataset(7, n=3)
        ops = dual_game_operator(ds, Kernel("linear"), 2.0, 2.0)
        rng = np.random.default_rng(10)
        v = ops.project(ops.lower + rng.uniform(0.2, 0.8, ops.dim) * (ops.upper - ops.lower))
        g = ops.pseudo_grad(v)
        h = 1e-6
        for i in (0, ops.dim_l - 1, ops.dim_l, ops.dim - 1):
            vp = v.copy(); vp[i] += h
            vm = v.copy(); vm[i] -= h
            fn = ops.cost_l if i < ops.dim_l else ops.cost_d
            fd = (fn(vp) - fn(vm)) / (2 * h)
            assert g[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)

    def test_default_dual_boxes_shape(self):
        lb, ab = default_dual_boxes(3)
        assert lb.dim == 8 and ab.dim == 18
