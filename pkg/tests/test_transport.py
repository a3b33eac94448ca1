import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshdenoise.transport import (KernelUnderflowWarning, SinkhornError, barycenter, entropy,
                                   gibbs_kernel, kernel_underflows, kl_divergence,
                                   marginal_residuals, monge_bruteforce, product_plan, sinkhorn,
                                   sinkhorn_log, transport_cost, uniform, wasserstein_p)

histograms = st.integers(1, 16).flatmap(
    lambda n: st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)
    .filter(lambda w: sum(w) > 1e-3).map(lambda w: np.array(w) / sum(w)))


def rand_hist(rng, n):
    w = rng.random(n)
    return w / w.sum()


class TestPlans:
    def test_product_plan(self):
        np.testing.assert_array_equal(product_plan([1.0], [1.0]).gamma, [[1.0]])
        np.testing.assert_array_equal(product_plan([.5, .5], [.5, .5]).gamma, np.full((2, 2), .25))
        rng = np.random.default_rng(0)
        mu, nu = rand_hist(rng, 5), rand_hist(rng, 7)
        p = product_plan(mu, nu)
        assert p.row_marginal_error <= 1e-15 and p.col_marginal_error <= 1e-15

    def test_transport_cost(self):
        assert transport_cost(product_plan(uniform(3), uniform(3)), np.zeros((3, 3))) == 0
        assert transport_cost(np.eye(2) / 2, [[0, 1], [1, 0]]) == 0
        rng = np.random.default_rng(1)
        g, c = rng.random((5, 5)), rng.random((5, 5))
        naive = 0.0
        for i in range(5):
            for j in range(5):
                naive += g[i, j] * c[i, j]
        assert abs(transport_cost(g, c) - naive) < 1e-14
        with pytest.raises(ValueError):
            transport_cost(g, c[:4])

    def test_marginal_residuals(self):
        mu, nu = uniform(3), uniform(4)
        assert marginal_residuals(product_plan(mu, nu), mu, nu) == (0.0, 0.0)
        assert marginal_residuals(np.zeros((3, 4)), mu, nu) == pytest.approx((1.0, 1.0))
        with pytest.raises(ValueError):
            marginal_residuals(np.zeros((4, 3)), mu, nu)


class TestMonge:
    def test_trivial(self):
        assert monge_bruteforce(np.zeros((4, 4))) == ((0, 1, 2, 3), 0.0)
        assert monge_bruteforce([[0, 1], [1, 0]]) == ((0, 1), 0.0)

    def test_tie_break_lexicographic(self):
        c = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert monge_bruteforce(c)[0] == (1, 2, 0)

    def test_random_6(self):
        c = np.random.default_rng(3).random((6, 6))
        best = min(sum(c[i, p[i]] for i in range(6)) for p in itertools.permutations(range(6)))
        assert monge_bruteforce(c)[1] == pytest.approx(best, abs=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError):
            monge_bruteforce(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            monge_bruteforce(np.zeros((10, 10)))


class TestInformation:
    def test_entropy_examples(self):
        assert entropy([1.0, 0.0, 0.0]) == 0.0
        assert entropy(uniform(7)) == pytest.approx(math.log(7), abs=1e-15)
        assert entropy([.5, .25, .25]) == pytest.approx(1.5 * math.log(2), abs=1e-15)

    def test_kl_examples(self):
        p = np.array([.2, .3, .5])
        assert kl_divergence(p, p) == 0.0
        assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf
        assert kl_divergence([.5, .5], [.25, .75]) == pytest.approx(
            .5 * math.log(2) + .5 * math.log(2 / 3), abs=1e-15)
        with pytest.raises(ValueError):
            kl_divergence([1.0], [.5, .5])

    @settings(max_examples=200, deadline=None)
    @given(data=st.data())
    def test_gibbs_inequality(self, data):
        p = data.draw(histograms)
        q = data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(p), max_size=len(p))
                      .filter(lambda w: sum(w) > 1e-3).map(lambda w: np.array(w) / sum(w)))
        kl = kl_divergence(p, q)
        assert kl >= -1e-15
        if np.max(np.abs(p - q)) > 1e-6:
            assert kl > 0

    @settings(max_examples=100, deadline=None)
    @given(histograms)
    def test_entropy_max_uniform(self, p):
        assert entropy(p) <= math.log(len(p)) + 1e-12


class TestKernel:
    def test_values(self):
        np.testing.assert_array_equal(gibbs_kernel(np.zeros((2, 3)), 0.5), 1.0)
        np.testing.assert_allclose(gibbs_kernel(np.full((2, 2), 0.3), 0.3), math.exp(-1), rtol=1e-15)

    def test_underflow_flag(self):
        c = np.array([[0.0, 750.0]])
        assert kernel_underflows(c, 1.0)
        with pytest.warns(KernelUnderflowWarning):
            gibbs_kernel(c, 1.0)
        assert not kernel_underflows(np.array([[0.0, 700.0]]), 1.0)

    def test_bad_eps(self):
        for eps in (0.0, -1.0):
            with pytest.raises(ValueError):
                gibbs_kernel(np.zeros((2, 2)), eps)


class TestSinkhorn:
    def test_single(self):
        state, plan = sinkhorn([1.0], [1.0], [[0.7]])
        np.testing.assert_allclose(plan.gamma, [[1.0]], rtol=1e-15)
        assert state.iterations_run == 1 and state.converged

    def test_ones_kernel_gives_product(self):
        rng = np.random.default_rng(4)
        mu, nu = rand_hist(rng, 4), rand_hist(rng, 6)
        state, plan = sinkhorn(mu, nu, np.ones((4, 6)))
        np.testing.assert_allclose(plan.gamma, np.outer(mu, nu), rtol=1e-13)
        assert state.iterations_run == 1

    def test_two_point(self):
        c = np.array([[0.0, 1.0], [1.0, 0.0]])
        mu = uniform(2)
        _, plan = sinkhorn(mu, mu, gibbs_kernel(c, 0.05))
        assert transport_cost(plan, c) < 0.01 * 0.5  # within 1% of the unit scale; optimum 0
        state, plan = sinkhorn_log(mu, mu, c, 0.05)
        assert transport_cost(plan, c) < 1e-6 * 1e3

    def test_residuals_and_positivity(self):
        rng = np.random.default_rng(5)
        mu, nu = rand_hist(rng, 5), rand_hist(rng, 5)
        c = rng.random((5, 5))
        state, plan = sinkhorn(mu, nu, gibbs_kernel(c, 0.2), tol=1e-9)
        assert state.converged
        assert max(state.residual_history[-1]) <= 1e-9
        assert max(marginal_residuals(plan, mu, nu)) <= 1e-9
        assert np.all(plan.gamma > 0)
        assert np.all(state.u > 0) and np.all(state.v > 0)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(6)
        mu, nu = rand_hist(rng, 5), rand_hist(rng, 5)
        K = gibbs_kernel(rng.random((5, 5)), 0.3)
        state, plan = sinkhorn(mu, nu, K)
        a = 10.0
        again = (a * state.u)[:, None] * K * (state.v / a)[None, :]
        np.testing.assert_allclose(again, plan.gamma, rtol=1e-14)

    def test_zero_row_errors(self):
        K = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(SinkhornError):
            sinkhorn(uniform(2), uniform(2), K)

    def test_blowup(self):
        c = np.array([[0.0, 1.0], [1.0, 0.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            K = np.exp(-c / 1e-3)  # off-diagonal underflows to 0 but rows are nonzero
            K2 = np.array([[1e-300, 1e-300], [1e-300, 1e-300]]) * 1e-20
        sinkhorn(uniform(2), uniform(2), K)  # fine: diagonal carries the mass
        with pytest.raises(SinkhornError, match="blowup"):
            sinkhorn(uniform(2), uniform(2), K2)

    @pytest.mark.parametrize("seed", range(5))
    def test_log_agrees_with_plain(self, seed):
        rng = np.random.default_rng(seed)
        mu, nu = rand_hist(rng, 5), rand_hist(rng, 5)
        c = rng.random((5, 5))
        eps = c.mean()
        _, p1 = sinkhorn(mu, nu, gibbs_kernel(c, eps), tol=1e-12)
        _, p2 = sinkhorn_log(mu, nu, c, eps, tol=1e-12)
        np.testing.assert_allclose(p2.gamma, p1.gamma, rtol=0, atol=1e-8)

    def test_log_single(self):
        state, plan = sinkhorn_log([1.0], [1.0], [[3.0]], 1e-3)
        np.testing.assert_allclose(plan.gamma, [[1.0]])
        assert state.iterations_run == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_log_small_eps_near_monge(self, seed):
        rng = np.random.default_rng(100 + seed)
        c = rng.random((6, 6))
        state, plan = sinkhorn_log(uniform(6), uniform(6), c, 1e-3 * c.max())
        assert state.converged
        opt = monge_bruteforce(c)[1] / 6
        assert abs(transport_cost(plan, c) - opt) <= 0.01 * opt

    def test_log_bad_eps(self):
        with pytest.raises(ValueError):
            sinkhorn_log(uniform(2), uniform(2), np.zeros((2, 2)), 0.0)


class TestWasserstein:
    def test_identical(self):
        X = np.random.default_rng(0).random((5, 2))
        r = wasserstein_p(X, X, uniform(5), uniform(5))
        assert r.value == 0.0 and r.exact

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_point_masses(self, p):
        r = wasserstein_p([[0.0, 0.0]], [[3.0, 4.0]], [1.0], [1.0], p=p)
        assert float(r) == pytest.approx(5.0, rel=1e-14)

    def test_two_points_line(self):
        X = np.array([[0.0], [1.0]])
        assert wasserstein_p(X, X[::-1], uniform(2), uniform(2)).value == 0.0

    def test_symmetry_and_approx_flag(self):
        rng = np.random.default_rng(8)
        X, Y = rng.random((4, 2)), rng.random((4, 2))
        a = wasserstein_p(X, Y, uniform(4), uniform(4))
        b = wasserstein_p(Y, X, uniform(4), uniform(4))
        assert a.value == pytest.approx(b.value, rel=1e-14) and a.value > 0
        mu = rand_hist(rng, 4)
        r = wasserstein_p(X, Y, mu, uniform(4))
        assert not r.exact and r.value > 0

    def test_errors(self):
        with pytest.raises(ValueError):
            wasserstein_p(np.zeros((3, 2)), np.zeros((2, 2)), uniform(2), uniform(2))
        with pytest.raises(ValueError):
            wasserstein_p(np.zeros((2, 2)), np.zeros((2, 3)), uniform(2), uniform(2))


def grid_kernel(n, eps, p=2):
    x = np.arange(n, dtype=float)
    return np.exp(-np.abs(x[:, None] - x[None, :]) ** p / eps)


class TestBarycenter:
    # With R = 1 (or identical inputs) the fixed point is K^T (a / K 1), which
    # equals the input up to the off-diagonal kernel mass; a sharp, strictly
    # positive kernel (off-diagonal at most e^-33) makes that negligible.
    def test_single_input(self):
        a = rand_hist(np.random.default_rng(0), 12)
        b = barycenter([a], [1.0], grid_kernel(12, 0.03, p=1), tol=1e-12)
        np.testing.assert_allclose(b, a, atol=1e-9)

    def test_single_input_blurred_kernel_fixed_point(self):
        a = rand_hist(np.random.default_rng(2), 9)
        K = grid_kernel(9, 3.0)
        b = barycenter([a], [1.0], K, tol=1e-13)
        np.testing.assert_allclose(b, K.T @ (a / (K @ np.ones(9))), atol=1e-12)

    def test_identical_inputs(self):
        a = rand_hist(np.random.default_rng(1), 10)
        b = barycenter([a, a, a], [.2, .3, .5], grid_kernel(10, 0.03, p=1), tol=1e-12)
        np.testing.assert_allclose(b, a, atol=1e-9)

    @pytest.mark.parametrize("i,j", [(2, 14), (15, 3), (5, 9)])
    def test_mode_between(self, i, j):
        n = 20
        a1, a2 = np.zeros(n), np.zeros(n)
        a1[i], a2[j] = 1.0, 1.0
        b = barycenter([a1, a2], [.5, .5], grid_kernel(n, 4.0))
        assert b.sum() == pytest.approx(1.0) and np.all(b >= 0)
        assert min(i, j) <= int(np.argmax(b)) <= max(i, j)

    def test_errors(self):
        K = grid_kernel(4, 1.0)
        with pytest.raises(ValueError):
            barycenter([uniform(4), uniform(3)], [.5, .5], K)
        with pytest.raises(ValueError):
            barycenter([uniform(4)], [1.0], np.zeros((4, 4)))
        with pytest.raises(ValueError):
            barycenter([uniform(4)], [0.5], K)
