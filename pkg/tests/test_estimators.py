import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from antithetic_cv.errors import ContractViolation, LearnerFailure, UnsupportedOperation
from antithetic_cv.estimators import (Method, NormalMeansData, cb_alpha, cv_alpha,
                                      cv_alpha_replicates, cv_decomposition, expfam_cross_term,
                                      kfold_cv, kfold_partition, randomized_fold_values, sure,
                                      smoothed_divergence_mc)
from antithetic_cv.predictors import (ConstantPredictor, FunctionPredictor, LinearSmoother,
                                      MeanLearner, SoftThreshold, ridge_smoother)
from antithetic_cv.rng import RngSpec, as_generator
from antithetic_cv.sampler import sample_antithetic

IDENTITY = LinearSmoother(np.eye(10))


def _data(n=10, seed=0, sigma2=1.0, theta=None):
    gen = np.random.default_rng(seed)
    theta = np.zeros(n) if theta is None else theta
    return NormalMeansData(theta + np.sqrt(sigma2) * gen.standard_normal(n), sigma2)


class TestCvAlpha:
    def test_estimate_fields(self):
        est = cv_alpha(_data(), IDENTITY, 0.1, 4, RngSpec(1))
        assert est.method is Method.ANTITHETIC_CV
        assert est.fold_values.shape == (4,)
        assert est.value == pytest.approx(est.fold_values.mean())
        assert est.seed == RngSpec(1)

    @settings(max_examples=60, deadline=None)
    @given(alpha=st.floats(1e-4, 10), k=st.integers(2, 12), seed=st.integers(0, 10**6),
           sigma2=st.floats(0.1, 10))
    def test_identity_fold_values(self, alpha, k, seed, sigma2):
        data = _data(seed=seed, sigma2=sigma2)
        w = sample_antithetic(k, 10, sigma2, RngSpec(seed)).draws
        vals = randomized_fold_values(data, IDENTITY, w, alpha)
        expected = np.einsum("kn,kn->k", w, w) * (2 + alpha)
        np.testing.assert_allclose(vals, expected, rtol=1e-8)

    def test_identity_mean(self):
        vals = cv_alpha_replicates(_data(), IDENTITY, 0.5, 3, RngSpec(2), 20_000)
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - 10 * 2.5) < 3 * se

    @settings(max_examples=30, deadline=None)
    @given(alpha=st.floats(1e-3, 5), k=st.integers(2, 8), c=st.floats(-5, 5),
           seed=st.integers(0, 10**6))
    def test_constant_exact(self, alpha, k, c, seed):
        # zero-sum noise makes the constant predictor's CV equal ||Y - c||^2
        data = _data(seed=seed)
        est = cv_alpha(data, ConstantPredictor(c), alpha, k, RngSpec(seed))
        target = np.sum((data.y - c) ** 2)
        assert est.value == pytest.approx(target, rel=1e-8, abs=1e-8)

    def test_black_box_matches_vectorized(self):
        data = _data()
        S = np.random.default_rng(5).standard_normal((10, 10))
        a = cv_alpha_replicates(data, LinearSmoother(S), 0.2, 3, RngSpec(3), 50)
        b = cv_alpha_replicates(data, FunctionPredictor(lambda y: S @ y), 0.2, 3, RngSpec(3), 50)
        np.testing.assert_allclose(a, b, rtol=1e-10)

    def test_deterministic(self):
        a = cv_alpha(_data(), SoftThreshold(1.0), 0.1, 5, RngSpec(4, 1)).value
        b = cv_alpha(_data(), SoftThreshold(1.0), 0.1, 5, RngSpec(4, 1)).value
        assert a == b

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 1e-9, np.nan])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            cv_alpha(_data(), IDENTITY, alpha, 2, RngSpec(0))

    def test_bad_k(self):
        with pytest.raises(ValueError):
            cv_alpha(_data(), IDENTITY, 0.1, 1, RngSpec(0))

    def test_shape_contract(self):
        with pytest.raises(ContractViolation):
            cv_alpha(_data(), FunctionPredictor(lambda y: y[:-1]), 0.1, 2, RngSpec(0))

    def test_bias_limit_linear_smoother(self):
        gen = np.random.default_rng(7)
        X = gen.standard_normal((20, 5))
        g = ridge_smoother(X, 0.7)
        S = g.smoothing_matrix
        theta = gen.standard_normal(20)
        pe = np.sum(((S - np.eye(20)) @ theta) ** 2) + np.sum(S * S) + 20
        rng = as_generator(RngSpec(7))
        vals = np.array([cv_alpha_replicates(NormalMeansData(theta + rng.standard_normal(20), 1.0),
                                             g, 1e-3, 4, rng, 1)[0] for _ in range(20_000)])
        assert abs(vals.mean() - pe) / pe <= 0.01


class TestDecomposition:
    @settings(max_examples=50, deadline=None)
    @given(alpha=st.floats(1e-4, 2), k=st.integers(2, 10), seed=st.integers(0, 10**6),
           lam=st.floats(0, 2))
    def test_terms_sum_to_cv(self, alpha, k, seed, lam):
        data = _data(seed=seed)
        g = SoftThreshold(lam)
        w = sample_antithetic(k, 10, 1.0, RngSpec(seed)).draws
        direct = randomized_fold_values(data, g, w, alpha).mean()
        fit_t, div_t, cross = cv_decomposition(data, g, w, alpha)
        assert abs(cross) <= 1e-8
        assert fit_t + div_t == pytest.approx(direct, rel=1e-8, abs=1e-8)

    def test_cross_term_nonzero_for_independent(self):
        data = _data(seed=1)
        w = np.random.default_rng(1).standard_normal((4, 10))
        _, _, cross = cv_decomposition(data, IDENTITY, w, 0.01)
        assert abs(cross) > 1e-3


class TestCoupledBootstrap:
    def test_zero_predictor_mean(self):
        theta = np.linspace(-1, 1, 10)
        data = _data(theta=theta, seed=3)
        vals = cv_alpha_replicates(data, ConstantPredictor(0.0), 0.5, 1, RngSpec(3), 40_000,
                                   independent=True)
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        # conditional on Y the mean is ||Y||^2
        assert abs(vals.mean() - data.y @ data.y) < 3 * se

    def test_zero_predictor_marginal(self):
        theta = np.linspace(-1, 1, 10)
        rng = as_generator(RngSpec(4))
        vals = [cb_alpha(NormalMeansData(theta + rng.standard_normal(10), 1.0),
                         ConstantPredictor(0.0), 0.5, 2, rng).value for _ in range(20_000)]
        se = np.std(vals, ddof=1) / np.sqrt(len(vals))
        assert abs(np.mean(vals) - (theta @ theta + 10)) < 3 * se

    def test_k1_allowed(self):
        assert cb_alpha(_data(), IDENTITY, 0.1, 1, RngSpec(0)).fold_values.shape == (1,)

    def test_identity_has_no_blowup(self):
        # for g = identity the CB score is ||w||^2 (2 + alpha) as well, so
        # the 1/alpha growth needs a map that does not reproduce Y
        data = _data(n=20, seed=5)
        w = np.random.default_rng(5).standard_normal((4, 20))
        vals = randomized_fold_values(data, LinearSmoother(np.eye(20)), w, 1e-3)
        np.testing.assert_allclose(vals, np.einsum("kn,kn->k", w, w) * (2 + 1e-3), rtol=1e-8)

    def test_variance_blowup(self):
        data = _data(n=20, seed=5, theta=np.full(20, 1.0))
        g = LinearSmoother(0.5 * np.eye(20))
        var_cb, var_cv = [], []
        for a in (0.1, 0.01, 0.001):
            var_cb.append(cv_alpha_replicates(data, g, a, 4, RngSpec(5, 1), 4000, independent=True).var())
            var_cv.append(cv_alpha_replicates(data, g, a, 4, RngSpec(5, 2), 4000).var())
        # 1/alpha growth for CB, bounded for antithetic
        assert var_cb[1] > 5 * var_cb[0] and var_cb[2] > 5 * var_cb[1]
        assert max(var_cv) < 1.5 * min(var_cv)
        assert var_cv[2] < var_cb[2] / 100

    def test_mse_dominance_linear_smoother(self):
        gen = np.random.default_rng(11)
        X = gen.standard_normal((20, 5))
        g = ridge_smoother(X, 0.7)
        S = g.smoothing_matrix
        theta = gen.standard_normal(20)
        pe = np.sum(((S - np.eye(20)) @ theta) ** 2) + np.sum(S * S) + 20
        rng = as_generator(RngSpec(11))
        Ys = theta + rng.standard_normal((3000, 20))
        err = {}
        for a in (0.1, 0.01, 0.001):
            for ind in (False, True):
                v = np.array([cv_alpha_replicates(NormalMeansData(y, 1.0), g, a, 4, rng, 1,
                                                  independent=ind)[0] for y in Ys])
                err[a, ind] = (v - pe) ** 2

        def gap(a, b, ind):
            d = err[a, ind] - err[b, ind]
            return d.mean(), d.std(ddof=1) / np.sqrt(d.size)

        for a, b in [(0.01, 0.1), (0.001, 0.01)]:
            m, se = gap(a, b, True)
            assert m > 2 * se  # CB gets worse as alpha shrinks
            m, se = gap(a, b, False)
            assert m <= 2 * se  # antithetic does not


class TestSure:
    def test_identity(self):
        assert sure(_data(), IDENTITY) == pytest.approx(20.0)

    def test_soft_threshold_hand_value(self):
        assert sure(NormalMeansData([3.0, 0.5, -2.0], 1.0), SoftThreshold(1.0)) == pytest.approx(6.25)

    def test_linear_smoother(self):
        gen = np.random.default_rng(0)
        S = gen.standard_normal((6, 6))
        y = gen.standard_normal(6)
        r = (np.eye(6) - S) @ y
        assert sure(NormalMeansData(y, 2.0), LinearSmoother(S)) == pytest.approx(r @ r + 4 * np.trace(S))

    def test_black_box_refused(self):
        with pytest.raises(UnsupportedOperation):
            sure(_data(), FunctionPredictor(lambda y: y))


class TestSmoothedDivergence:
    def test_constant_exactly_zero(self):
        v = smoothed_divergence_mc(ConstantPredictor(3.0), np.ones(5), 1.0, 0.1, 4, RngSpec(0), 10)
        assert abs(v) < 1e-12

    def test_linear_mean_trace(self):
        S = np.random.default_rng(1).standard_normal((8, 8))
        v = smoothed_divergence_mc(LinearSmoother(S), np.zeros(8), 2.0, 0.3, 3, RngSpec(1), 40_000)
        assert v == pytest.approx(np.trace(S), abs=0.1)

    def test_soft_threshold_count(self):
        v = smoothed_divergence_mc(SoftThreshold(1.0), np.array([3.0, 0.5, -2.0]), 1.0, 0.01, 2,
                                   RngSpec(2), 50_000)
        assert abs(v - 2.0) <= 0.05

    def test_bad_args(self):
        with pytest.raises(ValueError):
            smoothed_divergence_mc(IDENTITY, np.zeros(10), 1.0, 0.0, 2, RngSpec(0))
        with pytest.raises(ValueError):
            smoothed_divergence_mc(IDENTITY, np.zeros(10), 1.0, 0.1, 1, RngSpec(0))


class TestExpfamCrossTerm:
    def test_gaussian_identity(self):
        y = np.random.default_rng(0).standard_normal(6) + 1.0
        est = expfam_cross_term(LinearSmoother(np.eye(6)), y, lambda v: -v, 0.1, 4, RngSpec(0), 20_000)
        assert est == pytest.approx(y @ y - 6, abs=0.05)

    def test_constant_exact(self):
        c = np.array([1.0, -2.0, 0.5])
        y = np.array([0.3, 0.1, 2.0])
        est = expfam_cross_term(ConstantPredictor(0.0), y, lambda v: -v, 0.1, 3, RngSpec(1))
        assert est == 0.0
        g = FunctionPredictor(lambda v: c)
        est = expfam_cross_term(g, y, lambda v: -v, 0.1, 3, RngSpec(1))
        assert est == pytest.approx(c @ y, abs=1e-12)

    def test_soft_threshold_null(self):
        rng = as_generator(RngSpec(2))
        vals = [expfam_cross_term(SoftThreshold(1.0), rng.standard_normal(50), lambda v: -v,
                                  1e-3, 4, rng) for _ in range(1000)]
        se = np.std(vals, ddof=1) / np.sqrt(len(vals))
        assert abs(np.mean(vals)) < 3 * se


class TestKFold:
    def test_constant_responses(self):
        est = kfold_cv(np.zeros(10), np.full(10, 5.0), MeanLearner(), 5, RngSpec(0))
        assert est.value == 0.0

    def test_hand_example(self):
        est = kfold_cv(np.arange(4), [0, 0, 2, 2], MeanLearner(), 2, RngSpec(0),
                       folds=[np.array([0, 1]), np.array([2, 3])])
        np.testing.assert_allclose(est.fold_values, [16, 16])
        assert est.value / 4 == pytest.approx(4.0)

    def test_partition_sizes(self):
        folds = kfold_partition(10, 3, RngSpec(0))
        assert [len(f) for f in folds] == [4, 3, 3]
        assert sorted(np.concatenate(folds)) == list(range(10))

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            kfold_cv(np.zeros(3), np.zeros(3), MeanLearner(), 4, RngSpec(0))

    def test_learner_failure_carries_fold(self):
        class Bad:
            calls = 0

            def fit(self, X, y):
                Bad.calls += 1
                if Bad.calls == 2:
                    raise np.linalg.LinAlgError("singular")
                return ConstantPredictor(0.0)

        with pytest.raises(LearnerFailure) as info:
            kfold_cv(np.zeros(6), np.zeros(6), Bad(), 3, RngSpec(0))
        assert info.value.fold == 1
        assert isinstance(info.value.cause, np.linalg.LinAlgError)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(2, 50), data=st.data())
    def test_partition_property(self, n, data):
        k = data.draw(st.integers(2, n))
        folds = kfold_partition(n, k, RngSpec(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert sizes == sorted(sizes, reverse=True)
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))
