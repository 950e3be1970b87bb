"""Prediction-error estimators for the normal means problem.

Data are ``Y ~ N(theta, sigma2 I_n)`` with ``sigma2`` known, and the
target is ``PE(g) = E ||g(Y) - Y_tilde||^2`` for an independent copy
``Y_tilde``.  All estimators report on this summed (not per-coordinate)
scale.

Randomized estimators build, for each of ``K`` noise vectors ``w_k``, a
training copy ``Y + sqrt(alpha) w_k`` and a test copy ``Y - w_k / sqrt(alpha)``
and score

    ||Y - w_k / sqrt(alpha) - g(Y + sqrt(alpha) w_k)||^2 - ||w_k||^2 / alpha.

``cv_alpha`` couples the noise antithetically (rows sum to zero);
``cb_alpha`` (coupled bootstrap) draws them independently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractViolation, LearnerFailure, UnsupportedOperation
from .predictors import as_predictor
from .rng import RngLike, RngSpec, as_generator
from .sampler import antithetic_normals, independent_normals

__all__ = [
    "NormalMeansData",
    "Method",
    "RiskEstimate",
    "ALPHA_FLOOR",
    "cv_alpha",
    "cb_alpha",
    "randomized_fold_values",
    "cv_decomposition",
    "cv_alpha_replicates",
    "sure",
    "smoothed_divergence_mc",
    "kfold_cv",
    "kfold_partition",
    "expfam_cross_term",
]

ALPHA_FLOOR = 1e-8


@dataclass(frozen=True)
class NormalMeansData:
    y: np.ndarray
    sigma2: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if y.size < 1:
            raise ValueError("response vector must be nonempty")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size


class Method(str, enum.Enum):
    ANTITHETIC_CV = "antithetic"
    COUPLED_BOOTSTRAP = "cb"
    SURE = "sure"
    KFOLD_CV = "kfold"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class RiskEstimate:
    """A prediction-error estimate with its per-fold values and provenance."""

    value: float
    fold_values: np.ndarray
    method: Method
    alpha: float
    k_folds: int
    seed: Optional[RngSpec] = None

    def __float__(self):
        return self.value


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha < ALPHA_FLOOR:
        raise ValueError(f"alpha must be >= {ALPHA_FLOOR:g}, got {alpha}")


def _check_k(k_folds, minimum=2):
    if int(k_folds) != k_folds or k_folds < minimum:
        raise ValueError(f"k_folds must be an integer >= {minimum}, got {k_folds}")


def _fit(g, y_in, n):
    out = np.asarray(g.evaluate(y_in), dtype=float)
    if out.shape != (n,):
        raise ContractViolation(f"predictor returned shape {out.shape}, expected ({n},)")
    return out


def randomized_fold_values(data: NormalMeansData, g, noise: np.ndarray, alpha: float) -> np.ndarray:
    """Fold scores for a given stack of noise vectors (one per row)."""
    g = as_predictor(g)
    y = data.y
    n = data.n
    noise = np.atleast_2d(noise)
    ra = np.sqrt(alpha)
    vals = np.empty(noise.shape[0])
    for k, w in enumerate(noise):
        fit = _fit(g, y + ra * w, n)
        r = y - w / ra - fit
        vals[k] = r @ r - (w @ w) / alpha
    return vals


def _batched_fold_values(y, g, noise, alpha):
    """Fold scores for noise of shape ``(B, K, n)``; returns ``(B, K)``."""
    ra = np.sqrt(alpha)
    fits = np.asarray(g.evaluate_batch(y + ra * noise), dtype=float)
    if fits.shape != noise.shape:
        raise ContractViolation(f"predictor returned shape {fits.shape}, expected {noise.shape}")
    r = y - noise / ra - fits
    return np.einsum("bkn,bkn->bk", r, r) - np.einsum("bkn,bkn->bk", noise, noise) / alpha


def cv_alpha_replicates(data: NormalMeansData, g, alpha: float, k_folds: int, rng: RngLike,
                        n_rep: int, independent: bool = False) -> np.ndarray:
    """``n_rep`` independent realizations of ``cv_alpha`` (or ``cb_alpha``
    with ``independent=True``) on the same data.

    Their spread is the randomization-conditional variance
    ``Var(CV_alpha | Y)``.  Predictors with ``vectorized = True`` are
    evaluated in one batched call.
    """
    _check_alpha(alpha)
    _check_k(k_folds, minimum=1 if independent else 2)
    g = as_predictor(g)
    draw = independent_normals if independent else antithetic_normals
    noise = draw(rng, k_folds, data.n, data.sigma2, n_batches=n_rep)
    if getattr(g, "vectorized", False):
        vals = _batched_fold_values(data.y, g, noise, alpha)
    else:
        vals = np.stack([randomized_fold_values(data, g, w, alpha) for w in noise])
    return vals.mean(axis=1)


def _estimate(vals, method, alpha, k, rng):
    seed = rng if isinstance(rng, RngSpec) else None
    return RiskEstimate(float(np.mean(vals)), vals, method, float(alpha), int(k), seed)


def cv_alpha(data: NormalMeansData, g, alpha: float, k_folds: int, rng: RngLike) -> RiskEstimate:
    """Antithetic cross-validation estimate of ``PE(g)``.

    Parameters
    ----------
    data : NormalMeansData
    g : predictor
        Response map ``R^n -> R^n``.
    alpha : float
        Train/test noise split; bias vanishes as ``alpha -> 0`` while the
        variance stays bounded.
    k_folds : int
        Number of antithetic repetitions, ``>= 2``.
    rng : RngSpec or Generator

    Returns
    -------
    RiskEstimate
    """
    _check_alpha(alpha)
    _check_k(k_folds)
    w = antithetic_normals(rng, k_folds, data.n, data.sigma2)
    vals = randomized_fold_values(data, g, w, alpha)
    return _estimate(vals, Method.ANTITHETIC_CV, alpha, k_folds, rng)


def cb_alpha(data: NormalMeansData, g, alpha: float, k_reps: int, rng: RngLike) -> RiskEstimate:
    """Coupled-bootstrap estimate: the same scores with independent noise.

    Unbiased for the prediction error of ``g`` trained on data with
    variance inflated to ``(1 + alpha) sigma2``; its variance grows like
    ``1 / (K alpha)``.
    """
    _check_alpha(alpha)
    _check_k(k_reps, minimum=1)
    w = independent_normals(rng, k_reps, data.n, data.sigma2)
    vals = randomized_fold_values(data, g, w, alpha)
    return _estimate(vals, Method.COUPLED_BOOTSTRAP, alpha, k_reps, rng)


def cv_decomposition(data: NormalMeansData, g, noise: np.ndarray, alpha: float):
    """Split the antithetic CV value into its two surviving terms.

    Returns ``(fit_term, divergence_term, cross_term)`` where

    * ``fit_term = mean_k ||Y - g(Y + sqrt(alpha) w_k)||^2``,
    * ``divergence_term = mean_k 2 <w_k, g(Y + sqrt(alpha) w_k)> / sqrt(alpha)``,
    * ``cross_term = -mean_k 2 <Y, w_k> / sqrt(alpha)``, zero when the rows
      of ``noise`` sum to zero.
    """
    g = as_predictor(g)
    y = data.y
    ra = np.sqrt(alpha)
    fit_t = div_t = 0.0
    K = noise.shape[0]
    for w in noise:
        fit = _fit(g, y + ra * w, data.n)
        r = y - fit
        fit_t += r @ r
        div_t += 2.0 * (w @ fit) / ra
    cross = -2.0 * (y @ noise.sum(axis=0)) / ra / K
    return fit_t / K, div_t / K, cross


def sure(data: NormalMeansData, g) -> float:
    """Stein's unbiased estimate ``||Y - g(Y)||^2 + 2 sigma2 div g(Y)``.

    Raises
    ------
    UnsupportedOperation
        If ``g`` has no analytic divergence; use
        :func:`smoothed_divergence_mc` instead.
    """
    g = as_predictor(g)
    if not getattr(g, "has_divergence", False):
        raise UnsupportedOperation(
            f"{type(g).__name__} has no analytic divergence; "
            "combine smoothed_divergence_mc with the residual sum of squares instead")
    fit = _fit(g, data.y, data.n)
    r = data.y - fit
    return float(r @ r + 2.0 * data.sigma2 * g.divergence(data.y))


def smoothed_divergence_mc(g, y, sigma2: float, alpha: float, k_folds: int, rng: RngLike,
                           n_batches: int = 1) -> float:
    """Monte Carlo divergence of the Gaussian-smoothed predictor.

    Averages ``<w_k, g(y + sqrt(alpha) w_k)> / (sqrt(alpha) sigma2)`` over
    ``n_batches`` independent antithetic sets of ``k_folds`` draws with
    marginal ``N(0, sigma2 I)``.  The zero-sum coupling removes the
    ``<w_k, g(y)>`` term exactly, so a constant ``g`` returns 0.
    """
    _check_alpha(alpha)
    _check_k(k_folds)
    if n_batches < 1:
        raise ValueError(f"n_batches must be >= 1, got {n_batches}")
    g = as_predictor(g)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    ra = np.sqrt(alpha)
    W = antithetic_normals(rng, k_folds, n, sigma2, n_batches=n_batches).reshape(-1, n)
    total = 0.0
    for w in W:
        total += w @ _fit(g, y + ra * w, n)
    return float(total / (W.shape[0] * ra * sigma2))


def kfold_partition(n: int, k_folds: int, rng: RngLike) -> list:
    """Random partition of ``range(n)`` into contiguous blocks of a
    shuffled order; fold sizes differ by at most one, earlier folds larger."""
    if k_folds < 2 or k_folds > n:
        raise ValueError(f"k_folds must be between 2 and n={n}, got {k_folds}")
    perm = as_generator(rng).permutation(n)
    return np.array_split(perm, k_folds)


def kfold_cv(design, responses, learner, k_folds: int, rng: RngLike,
             folds: Optional[Sequence[np.ndarray]] = None) -> RiskEstimate:
    """Classic K-fold cross-validation on the summed-error scale.

    The fold score is the held-out sum of squared errors times
    ``n / |fold|``, so the result is comparable with ``cv_alpha``.  Pass
    ``folds`` to fix the partition.
    """
    y = np.asarray(responses, dtype=float).ravel()
    X = np.asarray(design)
    n = y.size
    if folds is None:
        _check_k(k_folds)
        folds = kfold_partition(n, k_folds, rng)
    else:
        folds = [np.asarray(f, dtype=np.intp) for f in folds]
        k_folds = len(folds)
    vals = np.empty(len(folds))
    mask = np.ones(n, dtype=bool)
    for k, test in enumerate(folds):
        mask[:] = True
        mask[test] = False
        try:
            model = learner.fit(X[mask], y[mask])
            pred = np.asarray(model.predict(X[test]), dtype=float)
        except Exception as exc:
            raise LearnerFailure(k, exc) from exc
        if pred.shape != (len(test),):
            raise ContractViolation(f"learner predicted shape {pred.shape} on fold {k}")
        r = y[test] - pred
        vals[k] = (r @ r) * n / len(test)
    return _estimate(vals, Method.KFOLD_CV, 0.0, k_folds, rng)


def expfam_cross_term(g, y, grad_log_h, alpha: float, k_folds: int, rng: RngLike,
                      n_batches: int = 1) -> float:
    """Randomized estimate of ``E[theta^T g(Y)]`` for an exponential family
    with base density ``h``, via Stein's identity with the smoothed
    divergence (unit-variance draws)."""
    g = as_predictor(g)
    y = np.asarray(y, dtype=float).ravel()
    div = smoothed_divergence_mc(g, y, 1.0, alpha, k_folds, rng, n_batches=n_batches)
    return float(-div - _fit(g, y, y.size) @ np.asarray(grad_log_h(y), dtype=float))
