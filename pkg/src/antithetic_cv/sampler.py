"""Antithetic and independent Gaussian randomization.

The antithetic law puts ``K`` jointly Gaussian vectors on the hyperplane
``sum_k w_k = 0``: each row is ``N(0, sigma2 I)`` and every pair of rows
has cross-covariance ``-sigma2 / (K - 1) I``, the most negative common
correlation a ``K x K`` exchangeable correlation matrix admits.

Rows are generated by centering ``K`` i.i.d. draws and inflating by
``sqrt(K / (K - 1))``; this reproduces both moments exactly at ``O(K d)``
cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .rng import RngLike, as_generator

__all__ = [
    "AntitheticDraws",
    "sample_antithetic",
    "sample_independent",
    "scale_draws",
    "antithetic_normals",
    "independent_normals",
]


@dataclass(frozen=True)
class AntitheticDraws:
    """``K`` randomization vectors stored row-wise.

    Attributes
    ----------
    draws : ndarray, shape (K, d)
        Row ``k`` is the ``k``-th randomization vector.
    marginal_scale : float or ndarray
        ``sigma2`` for isotropic draws, otherwise the ``d x d`` marginal
        covariance of each row.
    """

    draws: np.ndarray
    marginal_scale: Union[float, np.ndarray]

    @property
    def k_folds(self) -> int:
        return self.draws.shape[0]

    @property
    def dimension(self) -> int:
        return self.draws.shape[1]

    def __len__(self):
        return self.k_folds

    def __iter__(self):
        return iter(self.draws)

    def __getitem__(self, k):
        return self.draws[k]

    def zero_sum_residual(self) -> float:
        return float(np.max(np.abs(self.draws.sum(axis=0))))


def _check_sigma2(sigma2):
    if not np.isfinite(sigma2) or sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")


def _recenter(w, axis):
    # one extra pass removes the floating-point residual of the first centering
    return w - w.mean(axis=axis, keepdims=True)


def antithetic_normals(rng: RngLike, k_folds: int, dim: int, sigma2: float = 1.0,
                       n_batches: int | None = None) -> np.ndarray:
    """Vectorized antithetic draws.

    Returns an array of shape ``(K, dim)``, or ``(n_batches, K, dim)`` when
    ``n_batches`` is given; each batch is an independent antithetic set.
    """
    k_folds = int(k_folds)
    if k_folds < 2:
        raise ValueError(f"antithetic sampling needs k_folds >= 2, got {k_folds}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    _check_sigma2(sigma2)
    gen = as_generator(rng)
    shape = (k_folds, dim) if n_batches is None else (int(n_batches), k_folds, dim)
    z = gen.standard_normal(shape)
    if sigma2 != 1.0:
        z *= np.sqrt(sigma2)
    axis = -2
    w = np.sqrt(k_folds / (k_folds - 1.0)) * _recenter(z, axis)
    return _recenter(w, axis)


def independent_normals(rng: RngLike, k_reps: int, dim: int, sigma2: float = 1.0,
                        n_batches: int | None = None) -> np.ndarray:
    """I.i.d. ``N(0, sigma2 I)`` rows, same shape conventions as
    :func:`antithetic_normals`."""
    if k_reps < 1:
        raise ValueError(f"k_reps must be >= 1, got {k_reps}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    _check_sigma2(sigma2)
    gen = as_generator(rng)
    shape = (k_reps, dim) if n_batches is None else (int(n_batches), k_reps, dim)
    z = gen.standard_normal(shape)
    if sigma2 != 1.0:
        z *= np.sqrt(sigma2)
    return z


def sample_antithetic(k_folds: int, dim: int, sigma2: float, rng: RngLike) -> AntitheticDraws:
    """Draw one antithetic set of ``k_folds`` vectors in ``R^dim``.

    Parameters
    ----------
    k_folds : int
        Number of folds ``K >= 2``.
    dim : int
        Dimension of each vector.
    sigma2 : float
        Marginal variance of every coordinate.
    rng : RngSpec or Generator

    Returns
    -------
    AntitheticDraws
        Rows sum to zero to machine precision.
    """
    w = antithetic_normals(rng, k_folds, dim, sigma2)
    return AntitheticDraws(w, float(sigma2))


def sample_independent(k_reps: int, dim: int, sigma2: float, rng: RngLike) -> np.ndarray:
    """Draw ``k_reps`` i.i.d. ``N(0, sigma2 I_dim)`` rows (coupled-bootstrap noise)."""
    return independent_normals(rng, k_reps, dim, sigma2)


def scale_draws(draws: AntitheticDraws, sqrt_factor: np.ndarray) -> AntitheticDraws:
    """Map every row ``w`` to ``L w`` for a square-root factor ``L``.

    With ``L L^T = H`` the rows get marginal covariance ``sigma2 H`` and the
    cross-covariance becomes ``-sigma2 H / (K - 1)``.
    """
    L = np.asarray(sqrt_factor, dtype=float)
    d = draws.dimension
    if L.ndim != 2 or L.shape != (d, d):
        raise ValueError(f"sqrt_factor must be {d}x{d}, got shape {L.shape}")
    w = draws.draws @ L.T
    if draws.k_folds >= 2:
        w = _recenter(w, 0)
    scale = draws.marginal_scale
    H = L @ L.T
    cov = scale * H if np.isscalar(scale) else L @ np.asarray(scale) @ L.T
    return AntitheticDraws(w, cov)
