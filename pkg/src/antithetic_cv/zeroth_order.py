"""Gaussian-smoothing gradient estimates for black-box objectives.

The gradient of ``E F(theta + sigma w)``, ``w ~ N(0, I)``, equals
``E[F(theta + sigma w) w] / sigma``.  Drawing the ``K`` perturbations of a
batch antithetically makes them sum to zero, so the ``F(theta) w`` part of
every sample cancels within the batch and the variance no longer blows
up like ``1 / sigma^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import RngLike, as_generator
from .sampler import antithetic_normals, independent_normals

__all__ = ["GradEstimate", "antithetic_grad", "NonFiniteObjective"]


class NonFiniteObjective(FloatingPointError):
    def __init__(self, value, point):
        super().__init__(f"objective returned {value} at {point}")
        self.value = value
        self.point = point


@dataclass(frozen=True)
class GradEstimate:
    grad: np.ndarray
    sigma: float
    k: int
    batches: int
    batch_grads: np.ndarray = None

    @property
    def stderr(self) -> np.ndarray:
        """Per-coordinate standard error across batches."""
        if self.batch_grads is None or self.batches < 2:
            return np.full_like(self.grad, np.nan)
        return self.batch_grads.std(axis=0, ddof=1) / np.sqrt(self.batches)


def antithetic_grad(objective: Callable[[np.ndarray], float], theta, sigma: float, k: int,
                    batches: int, rng: RngLike, independent: bool = False) -> GradEstimate:
    """Smoothed-gradient estimate ``(1/(B K sigma)) sum F(theta + sigma w) w``.

    Parameters
    ----------
    objective : callable
        ``R^d -> R``.
    theta : array_like, shape (d,)
    sigma : float
        Smoothing scale.
    k : int
        Perturbations per batch (``>= 2`` for antithetic draws).
    batches : int
        Independent batches averaged together.
    rng : RngSpec or Generator
    independent : bool
        Draw the perturbations i.i.d. instead (for variance comparisons).

    Returns
    -------
    GradEstimate
        Also carries each batch's own estimate in ``batch_grads``.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if batches < 1:
        raise ValueError(f"batches must be >= 1, got {batches}")
    d = theta.size
    gen = as_generator(rng)
    if independent:
        W = independent_normals(gen, k, d, n_batches=batches)
    else:
        if k < 2:
            raise ValueError(f"antithetic perturbations need k >= 2, got {k}")
        W = antithetic_normals(gen, k, d, n_batches=batches)
    pts = theta + sigma * W
    F = np.empty(W.shape[:2])
    for b in range(batches):
        for j in range(k):
            v = float(objective(pts[b, j]))
            if not np.isfinite(v):
                raise NonFiniteObjective(v, pts[b, j])
            F[b, j] = v
    per_batch = np.einsum("bk,bkd->bd", F, W) / (k * sigma)
    return GradEstimate(per_batch.mean(axis=0), float(sigma), int(k), int(batches), per_batch)
