"""
Antithetic Gaussian draws
=========================

K randomization vectors with marginal N(0, sigma2 I), pairwise
covariance -sigma2/(K-1) I, and rows that sum to exactly zero.
"""

import numpy as np

from antithetic_cv import RngSpec, antithetic_normals, sample_antithetic, scale_draws

# a single set of K = 4 draws in dimension 3
draws = sample_antithetic(4, 3, 1.0, RngSpec(seed=7))
print(draws.draws.round(3))
print("column sums:", draws.draws.sum(axis=0))

# the law, checked on 200k independent sets
W = antithetic_normals(RngSpec(seed=7, stream_id=1), 4, 3, 1.0, n_batches=200_000)
print("marginal variance:", W[:, 0, :].var(axis=0).round(3))
print("cross-covariance (rows 0, 1):", np.mean(W[:, 0, :] * W[:, 1, :], axis=0).round(3),
      "expected", round(-1 / 3, 3))

# a matrix-valued marginal covariance H = L L^T
H = np.array([[2.0, 1.0], [1.0, 2.0]])
scaled = scale_draws(sample_antithetic(4, 2, 1.0, RngSpec(seed=8)), np.linalg.cholesky(H))
print("scaled rows still sum to", scaled.zero_sum_residual())
