"""
Estimating prediction error of a soft-thresholding rule
=======================================================

Compares antithetic CV, the coupled bootstrap and SURE on one dataset,
then shows how each randomized estimator's spread changes as alpha
shrinks.
"""

import numpy as np

from antithetic_cv import (NormalMeansData, RngSpec, SoftThreshold, cb_alpha, cv_alpha,
                           cv_alpha_replicates, smoothed_divergence_mc, sure)

gen = RngSpec(seed=3).generator()
theta = np.concatenate([np.full(10, 3.0), np.zeros(40)])
data = NormalMeansData(theta + gen.standard_normal(50), sigma2=1.0)
g = SoftThreshold(1.0)

print("SURE:             ", round(sure(data, g), 3))
print("antithetic CV:    ", round(cv_alpha(data, g, 0.01, 10, RngSpec(3, 1)).value, 3))
print("coupled bootstrap:", round(cb_alpha(data, g, 0.01, 10, RngSpec(3, 2)).value, 3))

# the smoothed divergence recovers the number of active coordinates
div = smoothed_divergence_mc(g, data.y, 1.0, 0.01, 2, RngSpec(3, 3), n_batches=20_000)
print("active coordinates:", g.divergence(data.y), " smoothed estimate:", round(div, 2))

# spread over the randomization, with Y held fixed
for alpha in (0.1, 0.01, 0.001):
    cv = cv_alpha_replicates(data, g, alpha, 4, RngSpec(4, 1), 2000)
    cb = cv_alpha_replicates(data, g, alpha, 4, RngSpec(4, 2), 2000, independent=True)
    print(f"alpha={alpha:<6} sd(CV)={cv.std():7.2f}  sd(CB)={cb.std():8.2f}")
