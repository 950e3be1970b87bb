"""Fixed-seed property checks, runnable from the command line.

Each suite returns a list of :class:`Check` records holding the observed
value, the expected value and the tolerance it was held to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import (NormalMeansData, cv_alpha_replicates, smoothed_divergence_mc, sure)
from .glm import ScalingFactor, cv_glm, glm_fold_values, ExpFamilyModel
from .predictors import ConstantPredictor, SoftThreshold, ridge_smoother
from .rng import RngSpec
from .sampler import antithetic_normals, sample_antithetic
from .zeroth_order import antithetic_grad

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    name: str
    observed: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.observed - self.expected) <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: observed={self.observed:.6g} "
                f"expected={self.expected:.6g} tol={self.tolerance:.3g}")


def sampler_suite(seed=0):
    W = antithetic_normals(RngSpec(seed), 5, 3, 1.0, n_batches=200_000)
    checks = []
    var = W[:, 0, :].var(axis=0)
    cross = np.mean(W[:, 0, :] * W[:, 1, :], axis=0)
    for i in range(3):
        checks.append(Check(f"marginal variance, coordinate {i}", var[i], 1.0, 0.02))
        checks.append(Check(f"cross-covariance, coordinate {i}", cross[i], -0.25, 0.02))
    resid = np.max(np.abs(W.sum(axis=1)))
    checks.append(Check("zero-sum residual", resid, 0.0, 1e-10 * 5 * np.max(np.abs(W))))
    a = sample_antithetic(4, 6, 2.0, RngSpec(seed, 3)).draws
    b = sample_antithetic(4, 6, 2.0, RngSpec(seed, 3)).draws
    checks.append(Check("determinism (max abs difference)", np.max(np.abs(a - b)), 0.0, 0.0))
    return checks


def stein_suite(seed=0, n_data=100_000):
    gen = RngSpec(seed).generator(1)
    g = SoftThreshold(1.0)
    Y = gen.standard_normal((n_data, 20))
    lhs = np.einsum("ij,ij->i", Y, g.evaluate(Y))
    div = np.count_nonzero(np.abs(Y) > 1.0, axis=1)
    d = lhs - div
    se = d.std(ddof=1) / np.sqrt(n_data)
    return [Check("E[(Y-theta)'g(Y)] - sigma2 E[div g]", d.mean(), 0.0, 3 * se)]


def variance_suite(seed=0, outer=5000, inner=200, alpha=1e-3, k=4):
    gen = RngSpec(seed).generator(2)
    X = gen.standard_normal((20, 5))
    g = ridge_smoother(X, 0.7)
    S = g.smoothing_matrix
    theta = gen.standard_normal(20)
    cond_var = np.empty(outer)
    for i in range(outer):
        data = NormalMeansData(theta + gen.standard_normal(20), 1.0)
        cond_var[i] = cv_alpha_replicates(data, g, alpha, k, gen, inner).var(ddof=1)
    limit = 4.0 / (k - 1) * (np.sum(S * S) + np.trace(S @ S))
    return [Check("E Var(CV | Y) vs 4/(K-1)(|S|_F^2 + tr S^2)", cond_var.mean(), limit, 0.1 * limit)]


def sure_suite(seed=0, batches=50_000, alpha=0.01, k=2):
    gen = RngSpec(seed).generator(3)
    g = SoftThreshold(1.0)
    theta = np.concatenate([np.full(10, 3.0), np.zeros(40)])
    data = NormalMeansData(theta + gen.standard_normal(50), 1.0)
    target = sure(data, g)
    vals = cv_alpha_replicates(data, g, alpha, k, gen, batches)
    div_mc = smoothed_divergence_mc(g, data.y, 1.0, alpha, k, gen, n_batches=batches)
    return [
        Check("randomization mean of CV vs SURE", vals.mean(), target, 0.02 * abs(target)),
        Check("smoothed divergence vs active count", div_mc, g.divergence(data.y),
              0.05 * max(1.0, g.divergence(data.y))),
    ]


def glm_suite(seed=0):
    gen = RngSpec(seed).generator(4)
    checks = []
    A = gen.standard_normal((6, 6))
    H = A @ A.T + 0.1 * np.eye(6)
    sf = ScalingFactor.from_matrix(H)
    S = gen.standard_normal(6)
    checks.append(Check("H^{1/2} H^{-1/2} S = S", np.max(np.abs(sf.sqrt @ (sf.inv_sqrt @ S) - S)),
                        0.0, 1e-8))
    checks.append(Check("L L^T = H", np.max(np.abs(sf.sqrt @ sf.sqrt.T - H)), 0.0, 1e-8))

    # Gaussian family: S = y, A = |theta|^2 / 2, log h = 0
    n = 10
    model = ExpFamilyModel(lambda y: np.asarray(y, float), lambda t: 0.5 * float(t @ t),
                           dim_p=n, n=n)
    theta0 = gen.standard_normal(n)

    class Const:
        def estimate(self, S):
            return theta0

    y = gen.standard_normal(n)
    est = cv_glm(model, y, Const(), ScalingFactor.from_matrix(np.eye(n)), 0.01, 5, RngSpec(seed, 9))
    plug_in = model.loss(theta0, y)
    checks.append(Check("constant learner: CV equals plug-in loss", est.value, plug_in,
                        1e-8 * max(1.0, abs(plug_in))))
    return checks


def zograd_suite(seed=0, batches=100_000):
    def f(t):
        return 0.5 * float(t @ t)

    theta = np.ones(5)
    est = antithetic_grad(f, theta, 0.1, 2, batches, RngSpec(seed, 1))
    checks = [Check(f"mean gradient, coordinate {i}", est.grad[i], 1.0, 3 * est.stderr[i])
              for i in range(5)]
    a = antithetic_grad(f, theta, 0.01, 2, 20_000, RngSpec(seed, 2))
    b = antithetic_grad(f, theta, 0.01, 2, 20_000, RngSpec(seed, 3), independent=True)
    ratio = a.batch_grads.var(axis=0).sum() / b.batch_grads.var(axis=0).sum()
    checks.append(Check("Var(antithetic)/Var(independent) at sigma=0.01", ratio, 0.0, 0.05))
    return checks


SUITES = {
    "sampler": sampler_suite,
    "stein": stein_suite,
    "variance": variance_suite,
    "sure": sure_suite,
    "glm": glm_suite,
    "zograd": zograd_suite,
}


def run_suite(name: str, seed: int = 0):
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed=seed)
