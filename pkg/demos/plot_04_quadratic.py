"""
The same data, two features
===========================

Targets are y = x^2 + noise. Handing a linear probe x^2 instead of x
leaves only the noise to explain.
"""

from repscore.dataset import make_quadratic_task
from repscore.pipeline import linear_probe_mse

sigma = 0.05
r1, r2 = make_quadratic_task(5000, sigma, seed=0)
m1, m2 = linear_probe_mse(r1), linear_probe_mse(r2)

# residual of the best line through x^2 on U[0, 1] has variance 1/180
print(f"MSE on x   : {m1:.5f}  (expected {1 / 180 + sigma**2:.5f})")
print(f"MSE on x^2 : {m2:.5f}  (expected {sigma**2:.5f})")
print(f"ratio      : {m2 / m1:.3f}")
