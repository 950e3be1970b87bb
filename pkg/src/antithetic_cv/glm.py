"""Antithetic cross-validation for exponential-family (GLM) losses.

The data enter through a sufficient statistic ``S_n`` scaled by
``1/sqrt(n)`` so that it is asymptotically ``N(mu_n, H_n)``.  The loss of
a parameter ``theta`` on data ``Y`` is

    L(theta, Y) = A_n(theta) - theta^T S_n(Y) - log h_n(Y) / sqrt(n).

Whitening ``T_n = H_n^{-1/2} S_n`` reduces the problem to unit-variance
Gaussian randomization; ``cv_glm`` then trains the estimator on
``T_n + sqrt(alpha) w_k`` and scores it against ``T_n - w_k / sqrt(alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .errors import ContractViolation, SeparationError
from .estimators import Method, RiskEstimate, _check_alpha, _check_k, kfold_partition
from .rng import RngLike, RngSpec, as_generator
from .sampler import antithetic_normals, independent_normals

__all__ = [
    "ExpFamilyModel",
    "LogisticModel",
    "logistic_model",
    "ScalingFactor",
    "fit_logistic_irls",
    "solve_logistic_score",
    "LogisticLearner",
    "plugin_H",
    "cv_glm",
    "kfold_cv_logistic",
    "MonteCarloValue",
    "oracle_pe_glm",
]


class ExpFamilyModel:
    """Loss ingredients of a sqrt(n)-scaled exponential family.

    Either subclass and override the three maps, or pass callables.
    """

    def __init__(self, suff_stat: Optional[Callable] = None,
                 log_partition: Optional[Callable] = None,
                 log_base: Optional[Callable] = None,
                 dim_p: Optional[int] = None, n: Optional[int] = None):
        self._S = suff_stat
        self._A = log_partition
        self._logh = log_base
        self.dim_p = dim_p
        self.n = n

    def suff_stat(self, y) -> np.ndarray:
        return np.asarray(self._S(y), dtype=float)

    def log_partition(self, theta) -> float:
        return float(self._A(theta))

    def log_base(self, y) -> float:
        return 0.0 if self._logh is None else float(self._logh(y))

    def loss(self, theta, y) -> float:
        theta = np.asarray(theta, dtype=float)
        return (self.log_partition(theta) - theta @ self.suff_stat(y)
                - self.log_base(y) / np.sqrt(self.n))


class LogisticModel(ExpFamilyModel):
    """Bernoulli responses with natural parameter ``x_i^T theta``.

    The base measure of the Bernoulli family is 1, so ``log h_n = 0``.
    """

    def __init__(self, design):
        X = np.asarray(design, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"design must be a nonempty n x p matrix, got shape {X.shape}")
        super().__init__(dim_p=X.shape[1], n=X.shape[0])
        self.design = X
        self._rootn = np.sqrt(X.shape[0])

    def suff_stat(self, y):
        return self.design.T @ np.asarray(y, dtype=float) / self._rootn

    def log_partition(self, theta):
        eta = self.design @ np.asarray(theta, dtype=float)
        return float(np.logaddexp(0.0, eta).sum() / self._rootn)

    def log_base(self, y):
        return 0.0

    def mean_suff_stat(self, eta):
        """``E S_n`` when the true linear predictor is ``eta``."""
        return self.design.T @ expit(eta) / self._rootn


def logistic_model(design) -> LogisticModel:
    return LogisticModel(design)


@dataclass(frozen=True)
class ScalingFactor:
    """A symmetric PSD matrix ``H`` with its symmetric square root and inverse root.

    Built by eigendecomposition; eigenvalues below ``floor * max eigenvalue``
    are raised to that floor so the inverse root exists.
    """

    h_matrix: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    condition: float

    @classmethod
    def from_matrix(cls, H, floor: float = 1e-10) -> "ScalingFactor":
        H = np.asarray(H, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"H must be square, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError("H has non-finite entries")
        H = 0.5 * (H + H.T)
        evals, V = np.linalg.eigh(H)
        top = evals[-1]
        if not top > 0:
            raise ValueError(f"H is numerically singular (largest eigenvalue {top:g})")
        lo = evals[0]
        cond = top / lo if lo > 0 else np.inf
        evals = np.maximum(evals, floor * top)
        root = np.sqrt(evals)
        return cls(H, (V * root) @ V.T, (V / root) @ V.T, float(cond))

    @property
    def dim(self) -> int:
        return self.h_matrix.shape[0]


# ---------------------------------------------------------------------------
# Logistic maximum likelihood
# ---------------------------------------------------------------------------

def _logistic_objective(X, b, theta, ridge):
    eta = X @ theta
    return np.logaddexp(0.0, eta).sum() - b @ theta + 0.5 * ridge * (theta @ theta)


def solve_logistic_score(design, target, ridge: float = 0.0, tol: float = 1e-8,
                         max_iter: int = 100, theta0=None, max_norm: float = 1e3):
    """Solve ``X^T sigmoid(X theta) + ridge * theta = target`` by damped Newton.

    With ``target = X^T y`` this is (ridge-penalized) logistic maximum
    likelihood; other targets arise when the sufficient statistic has been
    randomized.  Stops when the score's sup-norm is at most ``tol``.

    Raises
    ------
    SeparationError
        If ``|theta|`` exceeds ``max_norm`` or ``max_iter`` is reached.
    """
    X = np.asarray(design, dtype=float)
    b = np.asarray(target, dtype=float)
    p = X.shape[1]
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=float)
    trace = []
    f = _logistic_objective(X, b, theta, ridge)
    for it in range(max_iter + 1):
        mu = expit(X @ theta)
        grad = X.T @ mu - b + ridge * theta
        gnorm = float(np.max(np.abs(grad)))
        trace.append((it, float(np.linalg.norm(theta)), gnorm))
        w = mu * (1.0 - mu)
        hess = (X.T * w) @ X
        if ridge:
            hess[np.diag_indices(p)] += ridge
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        # under separation the score decays like exp(-|theta|) while Newton
        # steps stay O(1), so a small score alone is not convergence
        if gnorm <= tol and np.max(np.abs(step)) <= 1e-6 * (1.0 + np.max(np.abs(theta))):
            return theta
        if it == max_iter:
            break
        t = 1.0
        while True:
            cand = theta - t * step
            fc = _logistic_objective(X, b, cand, ridge)
            # slack absorbs rounding in f once the optimum is nearly reached
            if fc <= f + 1e-4 * t * (grad @ -step) + 1e-13 * abs(f) or t < 1e-10:
                break
            t *= 0.5
        theta, f = cand, fc
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > max_norm:
            trace.append((it + 1, float(np.linalg.norm(theta)), np.nan))
            raise SeparationError(
                f"logistic fit diverged (|theta| = {np.linalg.norm(theta):.3g}); "
                "data are likely separable", trace)
    raise SeparationError(f"logistic fit did not converge in {max_iter} iterations "
                          f"(score sup-norm {gnorm:.3g})", trace)


def fit_logistic_irls(design, responses, tol: float = 1e-8, max_iter: int = 100,
                      ridge: float = 0.0) -> np.ndarray:
    """Logistic regression by iteratively reweighted least squares.

    Parameters
    ----------
    design : ndarray, shape (n, p)
    responses : ndarray of {0, 1}, shape (n,)
    tol : float
        Sup-norm tolerance on the score (gradient of the negative
        log-likelihood).
    max_iter : int
    ridge : float
        Optional L2 penalty ``ridge/2 * |theta|^2`` on the raw
        negative log-likelihood.

    Returns
    -------
    ndarray, shape (p,)
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(responses, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.size:
        raise ValueError("design and responses have different lengths")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("responses must be 0/1")
    return solve_logistic_score(X, X.T @ y, ridge=ridge, tol=tol, max_iter=max_iter)


class LogisticLearner:
    """Ridge-penalized logistic MLE viewed as a function of ``S_n``.

    ``estimate(S)`` solves the score equation with ``X^T y`` replaced by
    ``sqrt(n) S``; a positive ``ridge`` keeps the solution finite when a
    randomized ``S`` leaves the range attainable by 0/1 responses.
    ``fit(X_rows, y_rows)`` fits the same penalized model to a subset of
    rows (classic K-fold CV).
    """

    def __init__(self, design, ridge: float = 1.0, tol: float = 1e-8, max_iter: int = 100):
        self.design = np.asarray(design, dtype=float)
        self.ridge = float(ridge)
        self.tol = tol
        self.max_iter = max_iter
        self._rootn = np.sqrt(self.design.shape[0])

    @property
    def dim_p(self) -> int:
        return self.design.shape[1]

    def estimate(self, S):
        return solve_logistic_score(self.design, self._rootn * np.asarray(S, dtype=float),
                                    ridge=self.ridge, tol=self.tol, max_iter=self.max_iter)

    def fit(self, X_rows, y_rows):
        X_rows = np.asarray(X_rows, dtype=float)
        return solve_logistic_score(X_rows, X_rows.T @ np.asarray(y_rows, dtype=float),
                                    ridge=self.ridge, tol=self.tol, max_iter=self.max_iter)


def plugin_H(design, theta_hat, floor: float = 1e-10) -> ScalingFactor:
    """Plug-in covariance ``(1/n) X^T W X`` of ``S_n`` at ``theta_hat``,
    with ``W = diag(pi (1 - pi))``."""
    X = np.asarray(design, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if not np.all(np.isfinite(theta_hat)):
        raise ValueError("theta_hat must be finite")
    mu = expit(X @ theta_hat)
    H = (X.T * (mu * (1.0 - mu))) @ X / X.shape[0]
    return ScalingFactor.from_matrix(H, floor=floor)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def _learner_output(learner, S, p):
    theta = np.asarray(learner.estimate(S), dtype=float)
    if theta.shape != (p,):
        raise ContractViolation(f"learner returned shape {theta.shape}, expected ({p},)")
    return theta


def glm_fold_values(model: ExpFamilyModel, y, learner, scaling: ScalingFactor,
                    noise: np.ndarray, alpha: float) -> np.ndarray:
    """Per-fold values of the GLM estimator for given unit-variance noise rows."""
    S = model.suff_stat(y)
    p = S.size
    if scaling.dim != p:
        raise ValueError(f"scaling is {scaling.dim}x{scaling.dim}, sufficient statistic has {p} entries")
    L = scaling.sqrt
    T = scaling.inv_sqrt @ S
    ra = np.sqrt(alpha)
    const = model.log_base(y) / np.sqrt(model.n)
    vals = np.empty(noise.shape[0])
    for k, w in enumerate(noise):
        theta = _learner_output(learner, L @ (T + ra * w), p)
        g_t = L.T @ theta
        vals[k] = model.log_partition(theta) - g_t @ (T - w / ra) - const
    return vals


def cv_glm(model: ExpFamilyModel, y, learner, scaling: ScalingFactor, alpha: float,
           k_folds: int, rng: RngLike, independent: bool = False) -> RiskEstimate:
    """Randomized cross-validation estimate of ``PE_n(g)`` for a GLM loss.

    Parameters
    ----------
    model : ExpFamilyModel
    y : array_like
        Observed responses.
    learner : object with ``estimate(S) -> theta``
    scaling : ScalingFactor
        ``H_n`` (or a plug-in estimate) with its square roots.
    alpha : float
    k_folds : int
    rng : RngSpec or Generator
    independent : bool
        Use independent instead of antithetic noise (the baseline
        "independent randomization" estimator).
    """
    _check_alpha(alpha)
    _check_k(k_folds, minimum=1 if independent else 2)
    p = scaling.dim
    if independent:
        noise = independent_normals(rng, k_folds, p)
        method = Method.INDEPENDENT
    else:
        noise = antithetic_normals(rng, k_folds, p)
        method = Method.ANTITHETIC_CV
    vals = glm_fold_values(model, y, learner, scaling, noise, alpha)
    seed = rng if isinstance(rng, RngSpec) else None
    return RiskEstimate(float(np.mean(vals)), vals, method, float(alpha), int(k_folds), seed)


def kfold_cv_logistic(design, y, learner: LogisticLearner, k_folds: int,
                      rng: RngLike, folds=None) -> RiskEstimate:
    """Classic K-fold CV of the scaled logistic loss.

    Each fold's held-out negative log-likelihood is scaled by
    ``n / |fold|`` and by ``1/sqrt(n)``, matching the full-data loss.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    if folds is None:
        _check_k(k_folds)
        folds = kfold_partition(n, k_folds, rng)
    vals = np.empty(len(folds))
    mask = np.ones(n, dtype=bool)
    for k, test in enumerate(folds):
        mask[:] = True
        mask[test] = False
        theta = learner.fit(X[mask], y[mask])
        eta = X[test] @ theta
        nll = np.sum(np.logaddexp(0.0, eta) - y[test] * eta)
        vals[k] = nll * n / len(test) / np.sqrt(n)
    seed = rng if isinstance(rng, RngSpec) else None
    return RiskEstimate(float(np.mean(vals)), vals, Method.KFOLD_CV, 0.0, len(folds), seed)


@dataclass(frozen=True)
class MonteCarloValue:
    """A Monte Carlo average with its standard error."""

    value: float
    stderr: float
    n_mc: int

    def __float__(self):
        return self.value


def oracle_pe_glm(model: ExpFamilyModel, learner, generator: Callable, n_mc: int,
                  rng: RngLike, test_mean_suff_stat=None) -> MonteCarloValue:
    """Monte Carlo ``PE_n(g) = E[A_n(g(S)) - g(S)^T S~ - log h_n(Y~)/sqrt(n)]``.

    ``generator(gen)`` must return one response vector from the true model.
    When ``test_mean_suff_stat`` (``E S~``) is supplied and ``log h_n`` is
    zero, the independent test copy is integrated out exactly instead of
    being sampled.
    """
    gen = as_generator(rng)
    vals = np.empty(n_mc)
    rootn = np.sqrt(model.n)
    for i in range(n_mc):
        y = generator(gen)
        theta = learner.estimate(model.suff_stat(y))
        if test_mean_suff_stat is not None:
            vals[i] = model.log_partition(theta) - theta @ test_mean_suff_stat
        else:
            yt = generator(gen)
            vals[i] = (model.log_partition(theta) - theta @ model.suff_stat(yt)
                       - model.log_base(yt) / rootn)
    se = float(vals.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("nan")
    return MonteCarloValue(float(vals.mean()), se, n_mc)
