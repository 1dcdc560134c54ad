import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from hdqp import datagen
from hdqp.errors import NotPositiveDefinite, SingularBlock, SingularBorderedMatrix, SingularM
from hdqp.harness import oracles
from hdqp.qp_core import (
    ProblemSpec,
    efficient_frontier,
    linear_functional,
    partitioned_inverse,
    solve_eqc,
)

SEED = 1234


def random_spd(rng, p, floor=0.5):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + floor * np.eye(p)


def random_spec(rng, p, k):
    sigma = random_spd(rng, p)
    v = rng.standard_normal((p, k))
    return ProblemSpec(sigma, v[:, -1], v, rng.standard_normal(k))


class TestSolveEqc:
    def test_identity_budget(self):
        sol = solve_eqc(ProblemSpec(np.eye(3), np.ones(3), np.ones((3, 1)), [1.0]))
        assert_allclose(sol.weights, np.full(3, 1 / 3), rtol=1e-14)
        assert sol.risk == pytest.approx(1 / 3, rel=1e-14)

    def test_diagonal_budget(self):
        sigma = np.diag([1.0, 2.0, 3.0])
        spec = ProblemSpec(sigma, np.ones(3), np.ones((3, 1)), [1.0])
        sol = solve_eqc(spec)
        assert_allclose(sol.weights, [6 / 11, 3 / 11, 2 / 11], rtol=1e-14)
        assert sol.risk == pytest.approx(6 / 11, rel=1e-14)
        _, oracle_risk = oracles.projected_gradient_qp(sigma, np.ones((3, 1)), [1.0])
        assert sol.risk == pytest.approx(oracle_risk, abs=1e-10)

    def test_matches_projected_gradient(self):
        rng = np.random.default_rng(SEED)
        spec = random_spec(rng, 5, 2)
        w, risk = oracles.projected_gradient_qp(spec.sigma, spec.v_cols, spec.u)
        sol = solve_eqc(spec)
        assert sol.risk == pytest.approx(risk, rel=1e-6)
        assert_allclose(sol.weights, w, atol=1e-6)

    def test_postconditions(self):
        rng = np.random.default_rng(SEED + 1)
        spec = random_spec(rng, 8, 3)
        sol = solve_eqc(spec)
        assert_allclose(spec.v_cols.T @ sol.weights, spec.u, rtol=1e-9, atol=1e-12)
        assert sol.risk == pytest.approx(spec.u @ np.linalg.solve(spec.m, spec.u), rel=1e-10)
        assert sol.risk == pytest.approx(sol.weights @ spec.sigma @ sol.weights, rel=1e-10)

    def test_optimal_among_feasible_points(self):
        rng = np.random.default_rng(SEED + 2)
        spec = random_spec(rng, 6, 2)
        risk = solve_eqc(spec).risk
        for _ in range(1000):
            w = oracles.feasible_point(spec.v_cols, spec.u, rng)
            assert risk <= w @ spec.sigma @ w + 1e-12

    def test_singular_m(self):
        v = np.column_stack([np.ones(4), 2 * np.ones(4)])
        with pytest.raises(SingularM):
            ProblemSpec(np.eye(4), np.ones(4), v, [1.0, 2.0])

    def test_not_positive_definite(self):
        sigma = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(NotPositiveDefinite):
            ProblemSpec(sigma, np.ones(3), np.ones((3, 1)), [1.0])

    def test_asymmetric_sigma_rejected(self):
        sigma = np.eye(3)
        sigma[0, 1] = 0.1
        with pytest.raises(NotPositiveDefinite):
            ProblemSpec(sigma, np.ones(3), np.ones((3, 1)), [1.0])

    @pytest.mark.parametrize("k", [0, 5])
    def test_constraint_count_bounds(self, k):
        with pytest.raises(ValueError):
            ProblemSpec(np.eye(4), np.ones(4), np.ones((4, k)), np.ones(k))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 100.0))
    def test_scale_covariance(self, seed, c):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng, 6, 2)
        scaled = ProblemSpec(c * spec.sigma, spec.mu, spec.v_cols, spec.u)
        a, b = solve_eqc(spec), solve_eqc(scaled)
        assert b.risk == pytest.approx(c * a.risk, rel=1e-9)
        assert_allclose(b.weights, a.weights, rtol=1e-8, atol=1e-10)


class TestLinearFunctional:
    def test_constraint_vector_limit(self):
        # v1 itself makes the bordered matrix singular; nearby vectors recover u1
        rng = np.random.default_rng(SEED)
        sigma = random_spd(rng, 5)
        v = rng.standard_normal((5, 2))
        spec = ProblemSpec(sigma, v[:, 1], v, [0.7, -1.3])
        with pytest.raises(SingularBorderedMatrix):
            linear_functional(spec, v[:, 0])
        direction = rng.standard_normal(5)
        for eps in (1e-2, 1e-3):
            gamma = v[:, 0] + eps * direction
            assert linear_functional(spec, gamma) == pytest.approx(0.7 + eps * direction @ solve_eqc(spec).weights, rel=1e-7)

    def test_exact_span_vector_is_singular(self):
        spec = ProblemSpec(np.eye(3), np.ones(3), np.ones((3, 1)), [1.0])
        with pytest.raises(SingularBorderedMatrix):
            linear_functional(spec, 2 * np.ones(3))

    def test_identity_first_coordinate(self):
        spec = ProblemSpec(np.eye(3), np.ones(3), np.ones((3, 1)), [1.0])
        assert linear_functional(spec, np.eye(3)[0]) == pytest.approx(1 / 3, rel=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_matches_weights(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng, 6, 2)
        gamma = rng.standard_normal(6)
        expected = gamma @ solve_eqc(spec).weights
        assert linear_functional(spec, gamma) == pytest.approx(expected, rel=1e-9, abs=1e-11)


class TestPartitionedInverse:
    def test_identity(self):
        b11, b12, b21, b22 = partitioned_inverse(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2))
        assert_allclose(b11, np.eye(2))
        assert_allclose(b22, np.eye(2))
        assert_allclose(b12, 0)
        assert_allclose(b21, 0)

    def test_two_by_two(self):
        b11, b12, b21, b22 = partitioned_inverse([[2.0]], [[1.0]], [[1.0]], [[2.0]])
        dense = np.linalg.inv([[2.0, 1.0], [1.0, 2.0]])
        assert b11.item() == pytest.approx(2 / 3, rel=1e-14)
        assert b22.item() == pytest.approx(2 / 3, rel=1e-14)
        assert b12.item() == pytest.approx(-1 / 3, rel=1e-14)
        assert b21.item() == pytest.approx(dense[1, 0], rel=1e-14)

    def test_dense_oracle(self):
        rng = np.random.default_rng(SEED)
        a = random_spd(rng, 5) + 0.2 * rng.standard_normal((5, 5))
        blocks = partitioned_inverse(a[:3, :3], a[:3, 3:], a[3:, :3], a[3:, 3:])
        for got, want in zip(blocks, oracles.dense_block_inverse(a, 3)):
            assert_allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_reassembly_many(self):
        rng = np.random.default_rng(SEED + 5)
        for _ in range(100):
            size = int(rng.integers(2, 9))
            split = int(rng.integers(1, size))
            a = random_spd(rng, size) + 0.1 * rng.standard_normal((size, size))
            b = partitioned_inverse(a[:split, :split], a[:split, split:], a[split:, :split], a[split:, split:])
            assert np.abs(a @ np.block([[b[0], b[1]], [b[2], b[3]]]) - np.eye(size)).max() < 1e-10

    def test_singular_schur_named(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularBlock) as info:
            partitioned_inverse(a[:1, :1], a[:1, 1:], a[1:, :1], a[1:, 1:])
        assert "A11" in info.value.factor or "A22" in info.value.factor


class TestEfficientFrontier:
    def test_two_asset_parabola(self):
        grid = np.linspace(-1, 3, 9)
        curve = efficient_frontier(np.eye(2), [0.0, 1.0], (np.ones((2, 1)), [1.0]), grid)
        assert_allclose(curve.risk, 0.5 + 2 * (grid - 0.5) ** 2, rtol=1e-13)
        a, b, c = curve.quadratic_coefficients()
        assert (a, b, c) == pytest.approx((2.0, -2.0, 1.0), rel=1e-13)

    def test_single_point_matches_solver(self):
        mu = np.array([0.1, 0.3, 0.2])
        sigma = np.diag([1.0, 2.0, 0.5])
        curve = efficient_frontier(sigma, mu, (np.ones((3, 1)), [1.0]), [0.25])
        spec = ProblemSpec(sigma, mu, np.column_stack([np.ones(3), mu]), [1.0, 0.25])
        assert len(curve) == 1
        assert list(curve)[0][1] == pytest.approx(solve_eqc(spec).risk, rel=1e-14)

    def test_three_point_fit(self):
        rng = np.random.default_rng(SEED)
        sigma = random_spd(rng, 6)
        mu = rng.standard_normal(6)
        curve = efficient_frontier(sigma, mu, (rng.standard_normal((6, 1)), [1.0]), np.linspace(-2, 2, 11))
        fit = np.polyfit(curve.mu_p[:3], curve.risk[:3], 2)
        assert_allclose(np.polyval(fit, curve.mu_p), curve.risk, rtol=1e-8)

    def test_mean_only(self):
        curve = efficient_frontier(np.eye(3), [1.0, 0.0, 0.0], (None, None), [2.0])
        assert curve.risk[0] == pytest.approx(4.0)

    def test_simulation_setup_monotone_above_vertex(self):
        sigma = datagen.toeplitz_sigma(100, 0.4)
        v1, mu = datagen.build_constraints(sigma, 90, 15, 0.3)
        grid = np.linspace(0.1, 5.0, 50)
        curve = efficient_frontier(sigma, mu, (v1[:, None], [1.0]), grid)
        a, b, _ = curve.quadratic_coefficients()
        vertex = -b / (2 * a)
        above = curve.risk[grid >= vertex]
        assert np.all(np.diff(above) >= 0)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            efficient_frontier(np.eye(2), [0.0, 1.0], (None, None), [])
