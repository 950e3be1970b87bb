import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from antithetic_cv.predictors import (ConstantPredictor, FunctionPredictor, IsotonicLearner,
                                      IsotonicPredictor, LearnerPredictor, LinearSmoother,
                                      MeanLearner, RidgeLearner, SoftThreshold, as_predictor,
                                      isotonic_learner, pava, ridge_smoother)


def brute_force_isotonic(y):
    """Projection onto the monotone cone by enumerating contiguous blocks.

    The projection is constant on blocks and equals the block mean there,
    so the best monotone candidate among all 2^(n-1) block partitions is
    the exact solution.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    best, best_sse = None, np.inf
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        fit = np.concatenate([np.full(b - a, y[a:b].mean()) for a, b in zip(bounds, bounds[1:])])
        if np.all(np.diff(fit) >= -1e-12):
            sse = np.sum((y - fit) ** 2)
            if sse < best_sse - 1e-12:
                best, best_sse = fit, sse
    return best


def finite_difference_trace(f, y, h=1e-6):
    tr = 0.0
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = h
        tr += (f(y + e)[i] - f(y - e)[i]) / (2 * h)
    return tr


class TestPava:
    def test_monotone_unchanged(self):
        np.testing.assert_allclose(pava([0, 1, 2], [1, 2, 3]).fitted, [1, 2, 3])

    def test_pool_everything(self):
        np.testing.assert_allclose(pava([0, 1, 2], [3, 1, 2]).fitted, [2, 2, 2])

    def test_single_violator(self):
        np.testing.assert_allclose(pava([0, 1, 2, 3], [1, 3, 2, 4]).fitted, [1, 2.5, 2.5, 4])

    def test_weights(self):
        # weighted mean of (3, w=3) and (1, w=1) is 2.5
        np.testing.assert_allclose(pava([0, 1], [3, 1], [3, 1]).fitted, [2.5, 2.5])

    def test_ties_pooled(self):
        fit = pava([0, 0, 1], [4, 0, 3])
        np.testing.assert_allclose(fit.knots, [0, 1])
        np.testing.assert_allclose(fit.fitted, [2, 3])

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            pava([1, 0], [0, 1])

    @pytest.mark.parametrize("bad", [dict(x=[], y=[]), dict(x=[0, 1], y=[0, 1], w=[1, 0])])
    def test_bad_input(self, bad):
        with pytest.raises(ValueError):
            pava(**bad)

    def test_exhaustive_small(self):
        # every response vector in {-2..2}^n for n <= 5
        for n in range(1, 6):
            for y in itertools.product(range(-2, 3), repeat=n):
                got = pava(np.arange(n), y).fitted
                np.testing.assert_allclose(got, brute_force_isotonic(y), atol=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-2, 2), min_size=6, max_size=6))
    def test_matches_brute_force_n6(self, y):
        np.testing.assert_allclose(pava(np.arange(6), y).fitted, brute_force_isotonic(y), atol=1e-8)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
    def test_kkt(self, y):
        y = np.asarray(y)
        fit = pava(np.arange(len(y)), y).fitted
        assert np.all(np.diff(fit) >= -1e-9)
        # residuals sum to zero within each constant block
        for v in np.unique(fit):
            blk = fit == v
            assert abs(np.sum(y[blk] - v)) <= 1e-7 * (1 + np.abs(y).sum())


class TestIsotonicLearner:
    def test_single_point(self):
        fit = isotonic_learner([0.5], [7.0])
        np.testing.assert_allclose(fit.predict([-10, 0.5, 3]), 7.0)

    def test_monotone_data_interpolated(self):
        x = np.array([0.3, 0.1, 0.2])
        y = np.array([3.0, 1.0, 2.0])
        np.testing.assert_allclose(isotonic_learner(x, y).predict(x), y)

    def test_step_extension(self):
        fit = isotonic_learner([0.0, 1.0], [1.0, 2.0])
        np.testing.assert_allclose(fit.predict([-1, 0.0, 0.5, 0.999, 1.0, 5]), [1, 1, 1, 1, 2, 2])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            isotonic_learner([], [])

    def test_population_consistency(self):
        gen = np.random.default_rng(0)
        x = gen.uniform(size=20_000)
        y = 2 * np.ceil(5 * x) - 6 + gen.standard_normal(x.size)
        grid = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
        np.testing.assert_allclose(isotonic_learner(x, y).predict(grid), [-4, -2, 0, 2, 4], atol=0.15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(-10, 10)), min_size=1, max_size=30),
           st.lists(st.floats(-1, 2), min_size=2, max_size=20))
    def test_prediction_monotone(self, pts, grid):
        x, y = map(np.array, zip(*pts))
        grid = np.sort(grid)
        assert np.all(np.diff(IsotonicLearner().fit(x, y).predict(grid)) >= -1e-12)


class TestIsotonicPredictor:
    def test_matches_learner(self):
        gen = np.random.default_rng(1)
        x = gen.uniform(size=50)
        y = gen.standard_normal(50)
        np.testing.assert_allclose(IsotonicPredictor(x).evaluate(y), isotonic_learner(x, y).predict(x))

    def test_ties(self):
        x = np.array([0.2, 0.1, 0.2])
        np.testing.assert_allclose(IsotonicPredictor(x).evaluate([0.0, 1.0, 4.0]), [2, 1, 2])

    def test_batch_matches_loop(self):
        gen = np.random.default_rng(2)
        g = IsotonicPredictor(gen.uniform(size=10))
        Y = gen.standard_normal((4, 10))
        np.testing.assert_allclose(g.evaluate_batch(Y), np.stack([g(y) for y in Y]))


class TestSoftThreshold:
    def test_hand_example(self):
        g = SoftThreshold(1.0)
        y = np.array([3.0, 0.5, -2.0])
        np.testing.assert_allclose(g(y), [2, 0, -1])
        assert g.divergence(y) == 2

    def test_zero_threshold_is_identity(self):
        y = np.array([1.5, -0.2, 0.0, 4.0])
        g = SoftThreshold(0.0)
        np.testing.assert_allclose(g(y), y)
        assert g.divergence(np.array([1.5, -0.2, 0.3])) == 3

    def test_large_threshold_is_zero(self):
        g = SoftThreshold(1e12)
        y = np.array([1e3, -5.0])
        np.testing.assert_array_equal(g(y), 0.0)
        assert g.divergence(y) == 0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            SoftThreshold(-1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(0, 3))
    def test_divergence_finite_difference(self, y, lam):
        y = np.asarray(y)
        assume(np.all(np.abs(np.abs(y) - lam) > 1e-3))
        g = SoftThreshold(lam)
        assert abs(finite_difference_trace(g, y) - g.divergence(y)) <= 1e-5


class TestRidgeSmoother:
    def test_identity_design(self):
        S = ridge_smoother(np.eye(4), 1.0)
        np.testing.assert_allclose(S.smoothing_matrix, np.eye(4) / 2)
        assert S.divergence() == pytest.approx(2.0)

    def test_projection_limit(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 3)))
        S = ridge_smoother(Q, 0.0)
        np.testing.assert_allclose(S.smoothing_matrix, Q @ Q.T, atol=1e-12)
        assert S.divergence() == pytest.approx(3.0)

    def test_trace_svd_oracle(self):
        X = np.random.default_rng(3).standard_normal((20, 5))
        d = np.linalg.svd(X, compute_uv=False)
        assert abs(ridge_smoother(X, 0.7).divergence() - np.sum(d**2 / (d**2 + 0.7))) < 1e-8

    def test_singular_rejected(self):
        X = np.ones((5, 2))
        with pytest.raises(ValueError):
            ridge_smoother(X, 0.0)
        with pytest.raises(ValueError):
            ridge_smoother(X, -1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 10_000))
    def test_divergence_finite_difference(self, n, seed):
        gen = np.random.default_rng(seed)
        g = LinearSmoother(gen.standard_normal((n, n)))
        y = gen.standard_normal(n)
        assert abs(finite_difference_trace(g, y, h=1e-3) - g.divergence(y)) <= 1e-6

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            LinearSmoother(np.ones((2, 3)))


class TestSimpleLearners:
    def test_mean_learner(self):
        g = MeanLearner().fit(None, [1.0, 2.0, 6.0])
        np.testing.assert_allclose(g.predict([0, 0]), [3.0, 3.0])

    def test_constant_predictor(self):
        c = ConstantPredictor(2.5)
        np.testing.assert_array_equal(c(np.zeros(3)), 2.5)
        assert c.divergence(np.zeros(3)) == 0.0

    def test_ridge_learner_recovers_line(self):
        x = np.linspace(0, 1, 50)[:, None]
        fit = RidgeLearner(1e-10).fit(x, 3 * x[:, 0] + 1)
        np.testing.assert_allclose(fit.predict([[0.0], [2.0]]), [1.0, 7.0], atol=1e-6)

    def test_learner_predictor(self):
        x = np.linspace(0, 1, 5)
        g = LearnerPredictor(IsotonicLearner(), x)
        np.testing.assert_allclose(g([0, 2, 1, 3, 4]), [0, 1.5, 1.5, 3, 4])


class TestBlackBox:
    def test_function_wrapped(self):
        g = as_predictor(lambda y: 2 * y)
        assert isinstance(g, FunctionPredictor)
        assert not g.has_divergence
        np.testing.assert_allclose(g(np.ones(2)), [2, 2])
        with pytest.raises(NotImplementedError):
            g.divergence(np.ones(2))

    def test_predictor_passthrough(self):
        g = SoftThreshold(1.0)
        assert as_predictor(g) is g
