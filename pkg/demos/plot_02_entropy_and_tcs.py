"""
Coding length, information in weights and the task complexity score
===================================================================

The Gaussian coding length of a feature matrix, and the score built from
ridge weight variance across resampled batches.
"""

import math

import numpy as np

from repscore import gaussian_entropy, info_in_weights, tcs

rng = np.random.default_rng(1)

# standard normal in 50 dimensions: 25 log(2 pi e) nats
x = rng.standard_normal((10_000, 50))
print("estimate", gaussian_entropy(x).value_nats, "exact", 25 * math.log(2 * math.pi * math.e))

# scaling every feature by a adds D log a
for a in (2, 4):
    print(a, gaussian_entropy(a * x).value_nats - gaussian_entropy(x).value_nats, 50 * math.log(a))

# with fewer samples than dimensions some eigenvalues are floored, and counted
est = gaussian_entropy(rng.standard_normal((20, 50)))
print("floored dimensions:", est.floored_dims, "of", est.retained_dims + est.floored_dims)

# information in weights falls as the weights vary more between runs
for var in (1e-4, 1e-2, 0.1, math.e - 1):
    print(f"var {var:<8.4g} I = {info_in_weights(np.full(4, var)):8.4f} nats")

# the score is 1/I, but only for representations that fit well enough
print(tcs(50.0, 1e-4, 1e-3))  # (info, train loss, threshold)
print(tcs(50.0, 1e-2, 1e-3))
