import numpy as np
import pytest
from scipy import stats

from repscore.dataset import SyntheticSpec, default_lemma2_spec, make_synthetic_regression
from repscore.features import FeatureMatrix, tile_features, vectorize
from repscore.regression import RidgeConfig, WeightStats, batched_ridge_runs, ridge_fit, run_rng
from repscore.dataset import make_texture_classification


def test_zero_targets_give_zero_weights(rng):
    w = ridge_fit(rng.normal(size=(10, 4)), np.zeros((10, 2)), 0.1)
    assert w.shape == (2, 4) and np.all(w == 0)


def test_scalar_closed_form():
    # sum xy / (sum x^2 + lambda) = 28 / 14.1
    w = ridge_fit(np.array([[1.0], [2.0], [3.0]]), np.array([2.0, 4.0, 6.0]), 0.1)
    assert w[0, 0] == pytest.approx(1.9858156028368794, rel=1e-12)


def test_ols_matches_pseudoinverse(rng):
    x, y = rng.normal(size=(50, 6)), rng.normal(size=(50, 3))
    w = ridge_fit(x, y, 0.0)
    np.testing.assert_allclose(w, (np.linalg.pinv(x) @ y).T, rtol=1e-8)


def test_dual_path_matches_primal(rng):
    x, y = rng.normal(size=(20, 60)), rng.normal(size=(20, 2))
    lam = 0.3
    primal = np.linalg.solve(x.T @ x + lam * np.eye(60), x.T @ y).T
    np.testing.assert_allclose(ridge_fit(x, y, lam), primal, rtol=1e-8, atol=1e-12)


def test_errors(rng):
    with pytest.raises(ValueError):
        ridge_fit(rng.normal(size=(5, 2)), rng.normal(size=(4, 1)))
    with pytest.raises(np.linalg.LinAlgError):
        ridge_fit(np.ones((5, 2)), rng.normal(size=(5, 1)), 0.0)
    with pytest.raises(ValueError):
        RidgeConfig(lam=-1)
    with pytest.raises(ValueError):
        RidgeConfig(runs=1)


def test_noiseless_runs_have_zero_variance(rng):
    spec = SyntheticSpec(np.eye(5), rng.normal(size=(2, 5)), 0.0, 1000, seed=3)
    fm = vectorize(make_synthetic_regression(spec))
    st = batched_ridge_runs(fm, RidgeConfig(lam=0.0, batch_size=64, runs=5, seed=1))
    assert np.abs(st.weight_variance).max() <= 1e-12
    assert st.per_run_batch_loss.max() <= 1e-12
    np.testing.assert_allclose(st.weight_mean, spec.true_weights, atol=1e-10)


def test_batch_loss_matches_noise_variance():
    spec = default_lemma2_spec(n=20, m=2, sample_count=5000, sigma=0.2, seed=4)
    st = batched_ridge_runs(vectorize(make_synthetic_regression(spec)), RidgeConfig(seed=7))
    # in-sample residual variance of a 256-row, 20-column fit is sigma^2 (1 - 20/256)
    assert st.mean_train_loss == pytest.approx(0.04, rel=0.15)
    assert st.mean_train_loss == pytest.approx(np.mean(st.per_run_batch_loss))


def test_determinism_and_run_order(rng):
    fm = vectorize(make_synthetic_regression(default_lemma2_spec(seed=5)))
    cfg = RidgeConfig(seed=11)
    a, b = batched_ridge_runs(fm, cfg), batched_ridge_runs(fm, cfg)
    assert a.per_run_weights.tobytes() == b.per_run_weights.tobytes()
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(4) as pool:
        c = batched_ridge_runs(fm, cfg, executor=pool)
    assert a.per_run_weights.tobytes() == c.per_run_weights.tobytes()


def test_conv_tile_batches_draw_images():
    ds = make_texture_classification(n_per_class=10, size=11, n_classes=3, seed=0)
    fm = tile_features(ds)
    st = batched_ridge_runs(fm, RidgeConfig(batch_size=8, runs=3, seed=0))
    assert st.batch_size_used == 8 and not st.whole_set_batch
    assert st.per_run_weights.shape == (3, 3, 147)


def test_whole_set_when_small():
    fm = vectorize(make_synthetic_regression(default_lemma2_spec(sample_count=100)))
    st = batched_ridge_runs(fm, RidgeConfig())
    assert st.whole_set_batch and st.batch_size_used == 100
    assert np.all(st.weight_variance <= 1e-12 * np.abs(st.weight_mean).max() ** 2)
    assert np.all(st.per_run_weights == st.per_run_weights[0])


def test_shrinkage_monotone_on_noise_driven_spread():
    spec = SyntheticSpec(np.eye(8), np.zeros((2, 8)), 0.5, 2000, seed=8)
    fm = vectorize(make_synthetic_regression(spec))
    totals = [batched_ridge_runs(fm, RidgeConfig(lam=lam, batch_size=100, seed=2)).weight_variance.sum()
              for lam in (0.0, 0.5, 5.0, 50.0, 500.0)]
    assert np.all(np.diff(totals) < 0)


def test_variance_tracks_ols_covariance_diagonal():
    n, m, sigma, batch = 10, 2, 0.1, 256
    spec = SyntheticSpec(np.diag(np.logspace(-1, 1, n)), np.ones((m, n)), sigma, 8192, seed=21)
    fm = vectorize(make_synthetic_regression(spec))
    cfg = RidgeConfig(seed=5)
    st = batched_ridge_runs(fm, cfg)
    theory = np.zeros(n)
    for r in range(cfg.runs):
        b = run_rng(cfg.seed, r).choice(np.arange(8192), batch, replace=False)
        theory += sigma**2 * np.diag(np.linalg.inv(fm.data[b].T @ fm.data[b])) / cfg.runs
    rho = stats.spearmanr(st.weight_variance.ravel(), np.tile(theory, m)).statistic
    assert rho > 0.7


def test_population_vs_sample_variance():
    fm = vectorize(make_synthetic_regression(default_lemma2_spec(seed=1)))
    pop = batched_ridge_runs(fm, RidgeConfig(seed=1))
    samp = batched_ridge_runs(fm, RidgeConfig(seed=1, ddof=1))
    np.testing.assert_allclose(samp.weight_variance, pop.weight_variance * 10 / 9)


def test_weight_stats_json_roundtrip():
    fm = vectorize(make_synthetic_regression(default_lemma2_spec(n=3, m=2, seed=1)))
    st = batched_ridge_runs(fm, RidgeConfig(runs=3))
    import json

    back = WeightStats.from_dict(json.loads(st.to_json()))
    assert back.per_run_weights.tobytes() == st.per_run_weights.tobytes()
    assert back.mean_train_loss == st.mean_train_loss


def test_empty_features():
    fm = FeatureMatrix(np.zeros((0, 3)), np.zeros((0, 1)), np.zeros(0, dtype=int), "dense")
    with pytest.raises(ValueError):
        batched_ridge_runs(fm)
