"""
Higher input coding length, more information in weights
=======================================================

A linear regression family whose input covariance is scaled by
1, 2, 4, 8 and 16. Larger inputs make the ridge weights tighter across
batches, so the information in weights grows with the coding length.
"""

from scipy import stats

from repscore import RidgeConfig, batched_ridge_runs, gaussian_entropy, info_in_weights, lemma2_check
from repscore.dataset import default_lemma2_spec, make_synthetic_regression
from repscore.features import vectorize

n, m = 10, 2
cells = []
for scale in (1, 2, 4, 8, 16):
    spec = default_lemma2_spec(n, m, sample_count=4096, sigma=0.1, cov_scale=scale, seed=0)
    fm = vectorize(make_synthetic_regression(spec))
    weights = batched_ridge_runs(fm, RidgeConfig(lam=0.1, batch_size=256, runs=10))
    h = gaussian_entropy(fm).value_nats
    info = info_in_weights(weights)
    cells.append((m / n * h, info))
    print(f"scale {scale:>2}  H = {h:8.3f}  I = {info:8.3f}  train MSE = {weights.mean_train_loss:.5f}")

res = lemma2_check(cells)
print("Spearman", res.spearman, "violation", res.violation)
print("ranks", stats.rankdata([c[0] for c in cells]), stats.rankdata([c[1] for c in cells]))
