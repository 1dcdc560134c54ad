import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from hdqp import datagen, spectral, theory
from hdqp.errors import DomainError, SingularM, SingularN

SEED = 2024


def plug_in(sample, v1, u):
    """Plug-in weights and the Gram matrix ``M_hat`` for constraints ``[v1, mu_hat]``."""
    v_hat = np.column_stack([v1, sample.mu_hat])
    sinv_v = np.linalg.solve(sample.sigma_hat, v_hat)
    m_hat = v_hat.T @ sinv_v
    return sinv_v @ np.linalg.solve(m_hat, u), m_hat, v_hat


class TestGaussianRiskFactor:
    def test_small_setup(self):
        assert theory.gaussian_risk_factor(250, 100, 2) == pytest.approx(151 / 249, rel=1e-15)

    def test_no_excess_dimensions(self):
        assert theory.gaussian_risk_factor(50, 3, 3) == 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            theory.gaussian_risk_factor(10, 20, 2)

    def test_chi_square_sampler(self):
        n, p, k = 250, 100, 2
        df = theory.gaussian_risk_df(n, p, k)
        draws = stats.chi2(df).rvs(size=100_000, random_state=SEED) / (n - 1)
        se = np.sqrt(2 * df) / (n - 1) / np.sqrt(draws.size)
        assert abs(draws.mean() - theory.gaussian_risk_factor(n, p, k)) < 3 * se

    def test_risk_ratio_monte_carlo(self):
        n, p, reps = 60, 20, 1000
        sigma = datagen.toeplitz_sigma(p, 0.4)
        root = datagen.sqrt_psd(sigma)
        sigma_inv = np.linalg.inv(sigma)
        v1, mu = datagen.build_constraints(sigma, 18, 3, 0.3)
        u = np.array([1.0, 2.0])
        ratios = []
        for r in range(reps):
            s = datagen.sample_gaussian(n, mu, sigma, SEED + r, root)
            w, _, v_hat = plug_in(s, v1, u)
            oracle = u @ np.linalg.solve(v_hat.T @ sigma_inv @ v_hat, u)
            ratios.append(w @ s.sigma_hat @ w / oracle)
        df = theory.gaussian_risk_df(n, p, 2)
        se = np.sqrt(2 * df) / (n - 1) / np.sqrt(reps)
        assert abs(np.mean(ratios) - theory.gaussian_risk_factor(n, p, 2)) < 3 * se


class TestOracleMeanPenalty:
    def test_known_mean(self):
        assert theory.oracle_mean_penalty(np.eye(2), [1.0, 2.0], 0.0) == 0.0

    def test_hand_value(self):
        assert theory.oracle_mean_penalty(np.eye(2), [1.0, 2.0], 0.5) == pytest.approx(4 / 3, rel=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.0, 10.0), k=st.integers(1, 5))
    def test_rank_one_update(self, seed, alpha, k):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((k, k))
        m = a @ a.T + 0.5 * np.eye(k)
        u = rng.standard_normal(k)
        e = np.zeros(k)
        e[-1] = 1.0
        drop = u @ np.linalg.solve(m, u) - u @ np.linalg.solve(m + alpha * np.outer(e, e), u)
        assert theory.oracle_mean_penalty(m, u, alpha) == pytest.approx(drop, rel=1e-8, abs=1e-10)

    def test_singular(self):
        with pytest.raises(SingularM):
            theory.oracle_mean_penalty(np.ones((2, 2)), [1.0, 1.0], 0.5)

    def test_oracle_risk_monte_carlo(self, large_setup):
        # only mu_hat matters for the oracle risk: draw it directly from N(mu, Sigma/n)
        n, p = 2500, 1000
        setup = large_setup
        u = np.array([1.0, 3.0])
        rng = np.random.default_rng(SEED)
        risks = []
        for _ in range(500):
            mu_hat = setup.mu + setup.root @ rng.standard_normal(p) / np.sqrt(n)
            v_hat = np.column_stack([setup.v1, mu_hat])
            risks.append(u @ np.linalg.solve(v_hat.T @ setup.sigma_inv @ v_hat, u))
        predicted = theory.frontier_value(setup.m, u) - theory.oracle_mean_penalty(setup.m, u, p / n)
        assert np.mean(risks) == pytest.approx(predicted, rel=0.02)


class TestPredictedEmpFrontier:
    def test_infinite_scaling(self):
        assert theory.predicted_emp_frontier(np.eye(2), [1.0, 2.0], 0.4, np.inf) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), rho=st.floats(0.01, 0.95))
    def test_classical_reduction(self, seed, rho):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 3))
        m = a @ a.T + np.eye(3)
        u = rng.standard_normal(3)
        got = theory.predicted_emp_frontier(m, u, rho, 1 / (1 - rho), kappa_n=0.0)
        assert got == pytest.approx((1 - rho) * theory.frontier_value(m, u), rel=1e-12)

    @pytest.mark.parametrize("p,n", [(100, 250), (1000, 2500), (100, 500)])
    @pytest.mark.parametrize("mu_p", [0.1, 1.0, 5.0])
    def test_frontier_ordering(self, p, n, mu_p):
        from conftest import simulation_setup

        setup = simulation_setup(p)
        u = np.array([1.0, mu_p])
        rho = p / n
        s_t = spectral.solve_limit_scaling(spectral.WeightDistribution.scaled_t_sq(6), rho).value
        f_t = theory.predicted_emp_frontier(setup.m, u, rho, s_t)
        f_g = theory.predicted_emp_frontier(setup.m, u, rho, 1 / (1 - rho))
        f_theo = theory.frontier_value(setup.m, u)
        assert f_t < f_g - 1e-6
        assert f_g < f_theo - 1e-6

    def test_gaussian_variant_monte_carlo(self, small_setup):
        n, p = 250, 100
        setup = small_setup
        u = np.array([1.0, 3.0])
        risks = []
        for r in range(1000):
            s = datagen.sample_gaussian(n, setup.mu, setup.sigma, SEED + r, setup.root)
            _, m_hat, _ = plug_in(s, setup.v1, u)
            risks.append(u @ np.linalg.solve(m_hat, u))
        assert np.mean(risks) == pytest.approx(theory.gaussian_emp_frontier(setup.m, u, n, p), rel=0.03)


class TestWeightBias:
    def test_unit_mean_exposure(self, small_setup):
        setup = small_setup
        w_b, _ = theory.predicted_weight_bias(setup.sigma, setup.v, setup.m, [1.0, 2.0], 1.7, 0.6)
        assert setup.mu @ w_b == pytest.approx(1.0, rel=1e-10)
        assert setup.v1 @ w_b == pytest.approx(0.0, abs=1e-10)

    def test_classical_regime(self, small_setup):
        setup = small_setup
        u = np.array([1.0, 2.0])
        w = theory.predicted_weights(setup.sigma, setup.v, setup.m, u, 1.0, 0.0)
        w_theo = setup.sigma_inv @ setup.v @ np.linalg.solve(setup.m, u)
        assert_allclose(w, w_theo, rtol=1e-9, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), s=st.floats(1.0, 10.0), kappa=st.floats(0.0, 3.0))
    def test_constraints_preserved(self, seed, s, kappa):
        rng = np.random.default_rng(seed)
        p, k = 8, 3
        a = rng.standard_normal((p, p))
        sigma = a @ a.T / p + np.eye(p)
        v = rng.standard_normal((p, k))
        m = v.T @ np.linalg.solve(sigma, v)
        u = rng.standard_normal(k)
        w = theory.predicted_weights(sigma, v, m, u, s, kappa)
        assert_allclose(v[:, :-1].T @ w, u[:-1], rtol=1e-8, atol=1e-9)


class TestRealizedReturns:
    def test_classical_regime(self):
        m = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert theory.predicted_realized_returns(m, [1.0, 0.0], 1.5, 0.0, 4.0) == 4.0

    def test_single_constraint(self):
        got = theory.predicted_realized_returns([[2.0]], [0.0], 1.5, 0.6, 3.0)
        assert got == pytest.approx(3.0 / (1 + 0.4 * 0.5), rel=1e-14)

    def test_overestimation(self, large_setup):
        got = theory.predicted_realized_returns(large_setup.m, [1.0, 0.0], 1 / 0.6, 2 / 3, 5.0)
        assert got < 5.0

    def test_matches_weight_bias(self, small_setup):
        setup = small_setup
        u = np.array([1.0, 5.0])
        w = theory.predicted_weights(setup.sigma, setup.v, setup.m, u, 1.7, 0.6)
        assert setup.mu @ w == pytest.approx(theory.predicted_realized_returns(setup.m, u, 1.7, 0.6, 5.0), rel=1e-10)


class TestConditionalExpectation:
    def test_orthogonal(self):
        assert theory.conditional_weight_expectation(np.diag([2.0, 3.0]), [4.0]) == 0.0

    def test_two_by_two(self):
        n_mat = np.array([[2.0, 1.0], [1.0, 1.0]])
        assert theory.conditional_weight_expectation(n_mat, [3.0]) == pytest.approx(-3.0, rel=1e-15)

    def test_wishart_oracle(self):
        n_mat = np.array([[2.0, 1.0], [1.0, 1.0]])
        w = stats.wishart(df=50, scale=n_mat).rvs(size=100_000, random_state=SEED)
        draws = -3.0 * w[:, 0, 1] / w[:, 1, 1]
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - theory.conditional_weight_expectation(n_mat, [3.0])) < 3 * se

    def test_singular(self):
        with pytest.raises(SingularN):
            theory.conditional_weight_expectation(np.ones((2, 2)), [1.0])

    def test_paired_simulation(self):
        # Gaussian Sigma_hat is independent of mu_hat: hold mu_hat fixed, redraw Sigma_hat
        n, p = 40, 10
        sigma = datagen.toeplitz_sigma(p, 0.4)
        root = datagen.sqrt_psd(sigma)
        v1, mu = datagen.build_constraints(sigma, 9, 2, 0.3)
        rng = np.random.default_rng(SEED)
        mu_hat = mu + root @ rng.standard_normal(p) / np.sqrt(n)
        v_hat = np.column_stack([v1, mu_hat])
        gamma = rng.standard_normal(p)
        u = np.array([1.0, 0.8])
        draws = []
        for _ in range(20_000):
            z = rng.standard_normal((n - 1, p)) @ root
            sigma_hat = z.T @ z / (n - 1)
            sinv_v = np.linalg.solve(sigma_hat, v_hat)
            draws.append(gamma @ sinv_v @ np.linalg.solve(v_hat.T @ sinv_v, u))
        draws = np.array(draws)
        expected = theory.conditional_weight_expectation(theory.n_gamma(sigma, v_hat, gamma), u)
        assert abs(draws.mean() - expected) < 3 * draws.std(ddof=1) / np.sqrt(draws.size)


class TestSummarize:
    def test_records(self, small_setup):
        preds = theory.summarize(small_setup.m, [1.0, 2.0], 250, 100, regime="gaussian_exact")
        assert [p.name for p in preds] == ["f_theo", "f_emp", "realized_return"]
        assert preds[0].inputs_digest["rho"] == 0.4
        assert preds[1].value == pytest.approx(theory.gaussian_emp_frontier(small_setup.m, [1.0, 2.0], 250, 100))

    def test_unknown_regime(self):
        with pytest.raises(ValueError):
            theory.Prediction("x", 1.0, "bogus")
