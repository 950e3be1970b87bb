"""Prediction rules used by the risk estimators.

Two small protocols are used throughout:

* a *predictor* maps a response vector ``y`` (length ``n``) to fitted
  values of the same length through ``evaluate(y)``, and may expose an
  analytic ``divergence(y)`` (trace of the Jacobian);
* a *learner* has ``fit(design, responses)`` returning an object whose
  ``predict(design_new)`` evaluates at arbitrary covariates.  Classic
  K-fold CV needs this second form.

Any plain callable can be turned into a predictor with :func:`as_predictor`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Predictor",
    "FunctionPredictor",
    "as_predictor",
    "IsotonicFit",
    "pava",
    "isotonic_learner",
    "IsotonicLearner",
    "IsotonicPredictor",
    "SoftThreshold",
    "soft_threshold_predictor",
    "LinearSmoother",
    "ridge_smoother",
    "ConstantPredictor",
    "MeanLearner",
    "RidgeLearner",
    "LearnerPredictor",
]


class Predictor:
    """Base class for response-to-fit maps.

    Subclasses implement :meth:`evaluate`; those with a closed-form
    divergence also override :meth:`divergence` and set
    ``has_divergence = True``.
    """

    has_divergence = False
    vectorized = False

    def evaluate(self, y):
        raise NotImplementedError

    def evaluate_batch(self, Y):
        """Evaluate on every row of ``Y`` (shape ``(..., n)``)."""
        Y = np.asarray(Y, dtype=float)
        flat = Y.reshape(-1, Y.shape[-1])
        return np.stack([self.evaluate(row) for row in flat]).reshape(Y.shape)

    def divergence(self, y) -> float:
        raise NotImplementedError(f"{type(self).__name__} has no analytic divergence")

    def __call__(self, y):
        return self.evaluate(y)


class FunctionPredictor(Predictor):
    """Black-box adapter: wraps any ``vector -> vector`` callable.

    The wrapped function may be a fitted neural network or any other
    model; no divergence is available, so SURE refuses it and the
    Monte Carlo divergence has to be used instead.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray],
                 divergence: Optional[Callable[[np.ndarray], float]] = None):
        self.func = func
        self._div = divergence
        self.has_divergence = divergence is not None

    def evaluate(self, y):
        return np.asarray(self.func(np.asarray(y, dtype=float)), dtype=float)

    def divergence(self, y) -> float:
        if self._div is None:
            return super().divergence(y)
        return float(self._div(np.asarray(y, dtype=float)))


def as_predictor(g) -> Predictor:
    if isinstance(g, Predictor):
        return g
    if hasattr(g, "evaluate"):
        return g
    if callable(g):
        return FunctionPredictor(g)
    raise TypeError(f"cannot use {type(g).__name__} as a predictor")


# ---------------------------------------------------------------------------
# Isotonic regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsotonicFit:
    """Weighted isotonic least-squares fit on distinct, sorted knots.

    Out-of-sample predictions are right-continuous steps: a point takes the
    fitted value of the largest knot not exceeding it, and points left of
    the first knot take the first fitted value.
    """

    knots: np.ndarray
    fitted: np.ndarray
    weights: np.ndarray

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        return self.fitted[np.clip(idx, 0, len(self.knots) - 1)]

    __call__ = predict


def _pava_sorted(y, w):
    """Pool-adjacent-violators on already ordered values.

    Returns block means expanded back to the input length.
    """
    means, wts, sizes = [], [], []
    for yi, wi in zip(y.tolist(), w.tolist()):
        m, ww, sz = yi, wi, 1
        while means and means[-1] > m:
            pw = wts.pop()
            tot = pw + ww
            m = (pw * means.pop() + ww * m) / tot
            ww = tot
            sz += sizes.pop()
        means.append(m)
        wts.append(ww)
        sizes.append(sz)
    return np.repeat(means, sizes)


def _pool_ties(x, y, w):
    knots, inverse = np.unique(x, return_inverse=True)
    wsum = np.bincount(inverse, weights=w)
    ybar = np.bincount(inverse, weights=w * y) / wsum
    return knots, ybar, wsum, inverse


def pava(x, y, w=None) -> IsotonicFit:
    """Weighted isotonic regression by pool-adjacent-violators.

    Parameters
    ----------
    x : array_like
        Covariates, sorted ascending.  Equal covariates are pooled into one
        knot (weighted mean) before the PAV pass.
    y : array_like
        Responses.
    w : array_like, optional
        Positive weights, default all ones.

    Returns
    -------
    IsotonicFit
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or w.shape != y.shape:
        raise ValueError("x, y and w must be 1-d arrays of equal length")
    if len(x) == 0:
        raise ValueError("pava needs at least one observation")
    if np.any(np.diff(x) < 0):
        raise ValueError("x must be sorted ascending")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    knots, ybar, wsum, _ = _pool_ties(x, y, w)
    return IsotonicFit(knots, _pava_sorted(ybar, wsum), wsum)


def isotonic_learner(x_train, y_train) -> IsotonicFit:
    """Fit isotonic regression on unsorted training data."""
    x_train = np.asarray(x_train, dtype=float).ravel()
    y_train = np.asarray(y_train, dtype=float).ravel()
    if x_train.size == 0:
        raise ValueError("empty training set")
    if x_train.shape != y_train.shape:
        raise ValueError("x_train and y_train lengths differ")
    order = np.argsort(x_train, kind="stable")
    return pava(x_train[order], y_train[order])


class IsotonicLearner:
    """Learner form of :func:`isotonic_learner` for K-fold CV."""

    def fit(self, design, responses) -> IsotonicFit:
        return isotonic_learner(design, responses)


class IsotonicPredictor(Predictor):
    """Isotonic regression of ``y`` on covariates fixed at construction.

    ``evaluate(y)`` returns the fitted values at the original covariates,
    in the original order.
    """

    def __init__(self, x):
        x = np.asarray(x, dtype=float).ravel()
        self.x = x
        self._order = np.argsort(x, kind="stable")
        knots, inverse = np.unique(x, return_inverse=True)
        self._knots = knots
        self._inverse = inverse
        self._counts = np.bincount(inverse).astype(float)
        self._has_ties = len(knots) < len(x)

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != self.x.shape:
            raise ValueError(f"expected response of length {len(self.x)}, got {y.shape}")
        if self._has_ties:
            ybar = np.bincount(self._inverse, weights=y) / self._counts
            return _pava_sorted(ybar, self._counts)[self._inverse]
        out = np.empty_like(y)
        out[self._order] = _pava_sorted(y[self._order], np.ones_like(y))
        return out


# ---------------------------------------------------------------------------
# Soft thresholding and linear smoothers
# ---------------------------------------------------------------------------

class SoftThreshold(Predictor):
    """Coordinatewise ``sign(y) * max(|y| - lam, 0)``; divergence counts
    the coordinates above the threshold."""

    has_divergence = True
    vectorized = True

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError(f"threshold must be nonnegative, got {lam}")
        self.lam = float(lam)

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.maximum(np.abs(y) - self.lam, 0.0)

    evaluate_batch = evaluate

    def divergence(self, y) -> float:
        return float(np.count_nonzero(np.abs(np.asarray(y)) > self.lam))


def soft_threshold_predictor(lam: float) -> SoftThreshold:
    return SoftThreshold(lam)


class LinearSmoother(Predictor):
    """``g(y) = S y`` for a fixed smoothing matrix ``S``."""

    has_divergence = True
    vectorized = True

    def __init__(self, smoothing_matrix):
        S = np.asarray(smoothing_matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError(f"smoothing matrix must be square, got {S.shape}")
        self.smoothing_matrix = S

    @property
    def n(self) -> int:
        return self.smoothing_matrix.shape[0]

    def evaluate(self, y):
        return self.smoothing_matrix @ np.asarray(y, dtype=float)

    def evaluate_batch(self, Y):
        return np.asarray(Y, dtype=float) @ self.smoothing_matrix.T

    def divergence(self, y=None) -> float:
        return float(np.trace(self.smoothing_matrix))

    def jacobian(self, y=None):
        return self.smoothing_matrix


def ridge_smoother(design, lam: float) -> LinearSmoother:
    """Hat matrix ``X (X^T X + lam I)^{-1} X^T`` of ridge regression."""
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if lam < 0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")
    p = X.shape[1]
    G = X.T @ X + lam * np.eye(p)
    if lam == 0 and np.linalg.matrix_rank(X) < p:
        raise ValueError("design is rank deficient; ridge with lam=0 is singular")
    return LinearSmoother(X @ np.linalg.solve(G, X.T))


# ---------------------------------------------------------------------------
# Simple learners
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantPredictor(Predictor):
    """Predicts ``value`` everywhere; as a response map it ignores ``y``."""

    value: float = 0.0
    has_divergence = True
    vectorized = True

    def evaluate(self, y):
        return np.full(np.shape(y), self.value, dtype=float)

    evaluate_batch = evaluate

    def divergence(self, y) -> float:
        return 0.0

    def predict(self, x):
        return np.full(len(np.atleast_1d(x)), self.value, dtype=float)


class MeanLearner:
    """Fits the global mean of the training responses."""

    def fit(self, design, responses) -> ConstantPredictor:
        responses = np.asarray(responses, dtype=float)
        if responses.size == 0:
            raise ValueError("empty training set")
        return ConstantPredictor(float(responses.mean()))


@dataclass(frozen=True)
class _LinearFit:
    coef: np.ndarray
    intercept: float

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return x @ self.coef + self.intercept


class RidgeLearner:
    """Ridge regression with an unpenalized intercept.

    Stand-in learner for covariate-based scenarios; any object with the
    same ``fit`` signature can replace it.
    """

    def __init__(self, lam: float = 1.0):
        self.lam = float(lam)

    def fit(self, design, responses) -> _LinearFit:
        X = np.asarray(design, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(responses, dtype=float)
        xm, ym = X.mean(axis=0), y.mean()
        Xc = X - xm
        coef = np.linalg.solve(Xc.T @ Xc + self.lam * np.eye(X.shape[1]), Xc.T @ (y - ym))
        return _LinearFit(coef, float(ym - xm @ coef))


class LearnerPredictor(Predictor):
    """Response map ``y -> learner.fit(design, y).predict(design)`` for a
    fixed design; lets any learner be scored by the randomized estimators."""

    def __init__(self, learner, design):
        self.learner = learner
        self.design = np.asarray(design)

    def evaluate(self, y):
        return np.asarray(self.learner.fit(self.design, y).predict(self.design), dtype=float)
