"""Self-check: every module invariant at desk scale, with measured values.

``overrides`` replaces named primitives (``dct2_array``, ``block_dct_array``,
``ycbcr_array``, ``ridge_fit``, ``gaussian_entropy``) so that a broken
implementation can be shown to be caught.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import colorspace, complexity, dataset, features, regression, spectral
from .pipeline import linear_probe_mse

__all__ = ["CheckResult", "VerifyReport", "verify_suite"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0


@dataclass
class VerifyReport:
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            vals = ", ".join(f"{k}={_fmt(v)}" for k, v in c.measured.items())
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<34} {vals}" + (f"  ({c.detail})" if c.detail else ""))
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed (seed {self.seed})")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


class _Prims:
    def __init__(self, overrides):
        self.dct2_array = spectral.dct2_array
        self.idct2_array = spectral.idct2_array
        self.block_dct_array = spectral.block_dct_array
        self.block_idct_array = spectral.block_idct_array
        self.ycbcr_array = colorspace.ycbcr_array
        self.ycbcr_inverse_array = colorspace.ycbcr_inverse_array
        self.ridge_fit = regression.ridge_fit
        self.gaussian_entropy = complexity.gaussian_entropy
        for k, v in (overrides or {}).items():
            if not hasattr(self, k):
                raise KeyError(f"unknown primitive {k!r}")
            setattr(self, k, v)


def _rand_images(rng, count, lo=5, hi=33, channels=(1, 3)):
    for _ in range(count):
        h, w = rng.integers(lo, hi + 1, size=2)
        c = int(rng.choice(channels))
        yield rng.uniform(size=(h, w, c))


# -- colour ------------------------------------------------------------------

def _ycbcr_roundtrip(p, rng):
    err = max(np.abs(p.ycbcr_inverse_array(p.ycbcr_array(x)) - x).max()
              for x in _rand_images(rng, 20, channels=(3,)))
    return err < 1e-9, {"max_abs_err": float(err)}


def _ycbcr_reference_values(p, rng):
    red = p.ycbcr_array(np.array([1.0, 0.0, 0.0]))
    black = p.ycbcr_array(np.zeros(3))
    g = rng.uniform()
    gray = p.ycbcr_array(np.full(3, g))
    expect_red = np.array([0.299, 0.5 - 0.299 / 1.772, 0.5 + 0.701 / 1.402])
    err = max(np.abs(red - expect_red).max(), np.abs(black - [0, .5, .5]).max(), np.abs(gray - [g, .5, .5]).max())
    return err < 1e-12, {"max_abs_err": float(err)}


def _ycbcr_linearity(p, rng):
    x, y = rng.uniform(size=(2, 6, 7, 3))
    a, b = rng.normal(size=2)
    lin = lambda v: p.ycbcr_array(v) - p.ycbcr_array(np.zeros(3))
    err = np.abs(lin(a * x + b * y) - a * lin(x) - b * lin(y)).max()
    return err < 1e-9, {"max_abs_err": float(err)}


def _prec_checks(p, rng):
    mix = np.array([[1.0, 0.3, 0.1], [0.2, 1.0, 0.4], [0.1, 0.2, 0.8]])
    imgs = rng.normal(size=(40, 8, 8, 3)) @ mix.T
    t = colorspace.fit_prec(imgs, 1e-8)
    back = t.invert_array(t.apply_array(imgs))
    rt = float(np.abs(back - imgs).max())
    ident = float(np.abs(t.matrix_u @ t.matrix_u_inverse - np.eye(3)).max())
    m2 = colorspace.channel_second_moment(t.apply_array(imgs))
    off = float(np.abs(m2 - np.diag(np.diag(m2))).max() / np.trace(m2))
    diag_err = float(np.abs(np.diag(m2) - t.eigenvalues / (t.eigenvalues + t.epsilon)).max())
    x, y = rng.normal(size=(2, 5, 5, 3))
    a, b = rng.normal(size=2)
    lin = float(np.abs(t.apply_array(a * x + b * y) - a * t.apply_array(x) - b * t.apply_array(y)).max())
    ok = rt < 1e-9 and ident < 1e-9 and off < 1e-6 and diag_err < 1e-9 and lin < 1e-9
    return ok, {"roundtrip_err": rt, "u_uinv_err": ident, "offdiag_over_trace": off,
                "diag_err": diag_err, "linearity_err": lin}


# -- spectral ----------------------------------------------------------------

def _dct_parseval(p, rng):
    worst = 0.0
    for x in _rand_images(rng, 20):
        for fwd in (p.dct2_array, p.block_dct_array):
            c = fwd(x)
            if fwd is p.block_dct_array:
                # energy of the padded image is what the block transform preserves
                h, w = x.shape[:2]
                x_e = np.pad(x, [(0, -h % 8), (0, -w % 8), (0, 0)], mode="edge")
            else:
                x_e = x
            e_in = np.sum(x_e**2, axis=(0, 1))
            e_out = np.sum(c**2, axis=(0, 1))
            worst = max(worst, float(np.max(np.abs(e_out - e_in) / e_in)))
    return worst < 1e-9, {"max_rel_energy_err": worst}


def _dct_bruteforce(p, rng):
    worst = 0.0
    for _ in range(6):
        h, w = rng.integers(1, 11, size=2)
        x = rng.normal(size=(h, w, 1))
        worst = max(worst, float(np.abs(p.dct2_array(x)[:, :, 0] - spectral.dct2_reference(x[:, :, 0])).max()))
    return worst < 1e-9, {"max_abs_err": worst}


def _dct_roundtrips(p, rng):
    worst = 0.0
    for x in _rand_images(rng, 20):
        worst = max(worst, float(np.abs(p.idct2_array(p.dct2_array(x)) - x).max()))
        back = p.block_idct_array(p.block_dct_array(x, 8), 8, x.shape[:2])
        worst = max(worst, float(np.abs(back - x).max()))
    return worst < 1e-9, {"max_abs_err": worst}


def _dct_linearity(p, rng):
    x, y = rng.normal(size=(2, 11, 9, 2))
    a, b = rng.normal(size=2)
    worst = 0.0
    for f in (p.dct2_array, p.idct2_array, lambda v: p.block_dct_array(v, 8),
              lambda v: p.block_idct_array(v, 8)):
        if f is p.idct2_array or f is p.dct2_array:
            u, v = x, y
        else:
            u, v = np.pad(x, [(0, 5), (0, 7), (0, 0)]), np.pad(y, [(0, 5), (0, 7), (0, 0)])
        worst = max(worst, float(np.abs(f(a * u + b * v) - a * f(u) - b * f(v)).max()))
    return worst < 1e-9, {"max_abs_err": worst}


def _block_composition(p, rng):
    x = rng.normal(size=(13, 10, 3))
    b = max(x.shape[:2])
    padded = np.pad(x, [(0, b - 13), (0, b - 10), (0, 0)], mode="edge")
    err = float(np.abs(p.block_dct_array(x, b) - p.dct2_array(padded)).max())
    return err < 1e-9, {"max_abs_err": err}


# -- features ----------------------------------------------------------------

def _tile_counts(p, rng):
    bad = 0
    for _ in range(10):
        h, w = rng.integers(7, 20, size=2)
        c = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        ds = dataset.LabeledDataset(rng.normal(size=(n, h, w, c)), rng.normal(size=(n, 2)))
        fm = features.tile_features(ds, 7, 2)
        rows = [ds.images[s, i:i + 7, j:j + 7, :].ravel()
                for s in range(n) for i in range(0, h - 6, 2) for j in range(0, w - 6, 2)]
        if fm.n_rows != len(rows) or not np.array_equal(fm.data, np.array(rows)):
            bad += 1
    return bad == 0, {"mismatched_shapes": bad}


# -- regression --------------------------------------------------------------

def _ridge_oracle(p, rng):
    worst = 0.0
    for _ in range(10):
        n, d, m = 40, int(rng.integers(2, 12)), int(rng.integers(1, 4))
        x, y = rng.normal(size=(n, d)), rng.normal(size=(n, m))
        lam = float(rng.uniform(0, 1))
        w = p.ridge_fit(x, y, lam)
        ref = np.linalg.pinv(x.T @ x + lam * np.eye(d)) @ x.T @ y
        worst = max(worst, float(np.abs(w - ref.T).max() / np.abs(ref).max()))
    return worst < 1e-8, {"max_rel_err": worst}


def _shrinkage(p, rng):
    # pure-noise targets on the same batches: only the noise term of the weight
    # spread remains, and it shrinks monotonically with lambda
    n, m = 6, 2
    spec = dataset.SyntheticSpec(np.eye(n), np.zeros((m, n)), 0.3, 600, int(rng.integers(1 << 30)))
    fm = features.vectorize(dataset.make_synthetic_regression(spec))
    totals = []
    for lam in (0.0, 1.0, 10.0, 100.0, 1000.0):
        st = regression.batched_ridge_runs(fm, regression.RidgeConfig(lam=lam, batch_size=64, runs=10, seed=1))
        totals.append(float(st.weight_variance.sum()))
    return bool(np.all(np.diff(totals) < 0)), {"total_variance": [float(f"{t:.6g}") for t in totals]}


def _variance_vs_theory(p, rng):
    n, m, sigma, batch = 10, 2, 0.1, 256
    cov = np.diag(np.logspace(-1, 1, n))
    w = rng.normal(size=(m, n))
    spec = dataset.SyntheticSpec(cov, w, sigma, 8192, int(rng.integers(1 << 30)))
    fm = features.vectorize(dataset.make_synthetic_regression(spec))
    cfg = regression.RidgeConfig(lam=0.1, batch_size=batch, runs=10, seed=2)
    st = regression.batched_ridge_runs(fm, cfg)
    theo = np.zeros(n)
    for r in range(cfg.runs):
        b = regression.run_rng(cfg.seed, r).choice(np.arange(len(fm.data)), batch, replace=False)
        xb = fm.data[b]
        theo += sigma**2 * np.diag(np.linalg.inv(xb.T @ xb)) / cfg.runs
    emp = st.weight_variance.ravel()
    rho = float(stats.spearmanr(emp, np.tile(theo, m)).statistic)
    return rho > 0.7, {"spearman": rho}


def _loss_matches_noise(p, rng):
    spec = dataset.default_lemma2_spec(n=10, m=2, sample_count=4096, sigma=0.1, seed=int(rng.integers(1 << 30)))
    fm = features.vectorize(dataset.make_synthetic_regression(spec))
    st = regression.batched_ridge_runs(fm, regression.RidgeConfig(seed=3))
    rel = abs(st.mean_train_loss - 0.01) / 0.01
    return rel < 0.15, {"mean_train_loss": st.mean_train_loss, "rel_err_vs_sigma2": rel}


# -- dataset -----------------------------------------------------------------

def _synthetic_exact(p, rng):
    spec = dataset.default_lemma2_spec(n=7, m=3, sample_count=200, sigma=0.0, seed=int(rng.integers(1 << 30)))
    ds = dataset.make_synthetic_regression(spec)
    x = ds.images.reshape(len(ds), -1)
    expect = x @ spec.true_weights.T
    rel = float(np.abs(ds.targets - expect).max() / np.abs(expect).max())
    return rel <= 1e-12, {"max_rel_err": rel}


def _split_partition(p, rng):
    bad = 0
    for _ in range(30):
        n = int(rng.integers(3, 60))
        fr = rng.dirichlet(np.ones(3))
        ds = dataset.LabeledDataset(np.zeros((n, 1, 1, 1)), np.zeros((n, 1)))
        s = dataset.split_dataset(ds, fr, int(rng.integers(1 << 30))).split
        allidx = np.concatenate([s["train"], s["val"], s["test"]])
        if sorted(allidx.tolist()) != list(range(n)):
            bad += 1
    return bad == 0, {"bad_partitions": bad}


# -- complexity --------------------------------------------------------------

def _entropy_accuracy(p, rng):
    x = rng.standard_normal((10_000, 50))
    h = p.gaussian_entropy(x).value_nats
    target = 50 * 0.5 * math.log(2 * math.pi * math.e)
    rel = abs(h - target) / target
    return rel < 0.02, {"entropy": h, "target": target, "rel_err": rel}


def _entropy_scaling(p, rng):
    x = rng.standard_normal((2000, 20)) @ rng.normal(size=(20, 20))
    base = p.gaussian_entropy(x)
    worst = 0.0
    for a in rng.uniform(0.5, 4.0, size=4):
        worst = max(worst, abs(p.gaussian_entropy(a * x).value_nats - base.value_nats - base.retained_dims * math.log(a)))
    return worst < 1e-6 and base.floored_dims == 0, {"max_abs_err": worst}


def _entropy_orthonormal(p, rng):
    n, h = 3000, 6
    a = rng.normal(size=(h * h, h * h))
    cov = a @ a.T / (h * h) + 0.05 * np.eye(h * h)
    x = rng.multivariate_normal(np.zeros(h * h), cov, size=n).reshape(n, h, h, 1)
    cond = float(np.linalg.cond(cov))
    flat = lambda v: v.reshape(len(v), -1)
    e0 = p.gaussian_entropy(flat(x))
    e1 = p.gaussian_entropy(flat(p.dct2_array(x)))
    delta = abs(e1.value_nats - e0.value_nats)
    # rank-deficient: fewer samples than dimensions
    small = p.gaussian_entropy(flat(x[:20]))
    ok = cond < 1e6 and delta < 0.1 and small.floored_dims > 0
    return ok, {"cond": cond, "delta_nats": delta, "rank_deficient_floored": small.floored_dims}


def _info_monotone(p, rng):
    var = rng.uniform(1e-6, math.e - 1.01, size=30)
    base = complexity.info_in_weights(var)
    bad = 0
    for i in range(var.size):
        up = var.copy()
        up[i] *= 1.0 + rng.uniform(0.01, 0.1)
        up[i] = min(up[i], math.e - 1.0 - 1e-9)
        if not complexity.info_in_weights(up) < base:
            bad += 1
    fixed = complexity.info_in_weights(np.full(5, math.e - 1))
    return bad == 0 and abs(fixed) < 1e-12, {"non_decreasing": bad, "I_at_e_minus_1": fixed}


def _tcs_gate(p, rng):
    bad = 0
    for _ in range(1000):
        info = float(rng.normal(0, 50))
        loss, t = rng.uniform(0, 1, size=2)
        score, log_score = complexity.tcs(info, loss, t)
        expect = loss < t and info > 0
        if (score > 0) != expect or (score > 0 and abs(score * info - 1) > 1e-12):
            bad += 1
        if (log_score is None) == (score > 0):
            bad += 1
    return bad == 0, {"violations": bad}


def _ranking_permutation(p, rng):
    est = complexity.EntropyEstimate(0.0, 1, 0, 1e-12)
    reports = [complexity.ComplexityReport("d", f"r{i}", "dense", float(rng.uniform(0, 1)),
                                           float(rng.uniform(1, 100)), est, 0.5, 1, 1)
               for i in range(8)]
    ranked = complexity.rank_representations(reports)
    names = sorted(r.report.representation_name for r in ranked)
    flagged = {r.report.representation_name for r in ranked if r.disregarded}
    expect = {r.representation_name for r in reports if r.train_loss >= 0.5}
    tail_ok = all(r.disregarded for r in ranked[len(ranked) - len(expect):])
    return names == sorted(r.representation_name for r in reports) and flagged == expect and tail_ok, \
        {"disregarded": len(flagged)}


def _lemma2(p, rng):
    seed = int(rng.integers(1 << 30))
    cells = []
    for a in (1, 2, 4, 8, 16):
        spec = dataset.default_lemma2_spec(10, 2, 4096, 0.1, cov_scale=a, seed=seed)
        fm = features.vectorize(dataset.make_synthetic_regression(spec))
        st = regression.batched_ridge_runs(fm, regression.RidgeConfig(seed=seed))
        ent = p.gaussian_entropy(fm)
        cells.append((2 / 10 * ent.value_nats, complexity.info_in_weights(st)))
    res = complexity.lemma2_check(cells)
    return (not res.violation and not res.degenerate and res.spearman > 1 - 1e-12), {"spearman": res.spearman}


def _quadratic(p, rng, max_ratio=0.5):
    # oracle ratio is sigma^2 / (1/180 + sigma^2) = 0.31 at sigma = 0.05
    sigma = 0.05
    r1, r2 = dataset.make_quadratic_task(5000, sigma, int(rng.integers(1 << 30)))
    m1, m2 = linear_probe_mse(r1), linear_probe_mse(r2)
    e1 = 1 / 180 + sigma**2
    ok = m2 < max_ratio * m1 and abs(m2 - sigma**2) / sigma**2 < 0.25 and abs(m1 - e1) / e1 < 0.25
    return ok, {"mse_r1": m1, "mse_r2": m2, "ratio": m2 / m1}


CHECKS = [
    ("ycbcr_roundtrip", _ycbcr_roundtrip),
    ("ycbcr_reference_values", _ycbcr_reference_values),
    ("ycbcr_linearity", _ycbcr_linearity),
    ("prec_roundtrip_whitening_linearity", _prec_checks),
    ("dct_parseval", _dct_parseval),
    ("dct_bruteforce_oracle", _dct_bruteforce),
    ("dct_roundtrips", _dct_roundtrips),
    ("dct_linearity", _dct_linearity),
    ("blockdct_full_block_equals_dct", _block_composition),
    ("tile_enumeration", _tile_counts),
    ("ridge_pinv_oracle", _ridge_oracle),
    ("ridge_shrinkage_monotone", _shrinkage),
    ("weight_variance_vs_theory", _variance_vs_theory),
    ("batch_loss_matches_noise", _loss_matches_noise),
    ("synthetic_zero_noise_exact", _synthetic_exact),
    ("split_partition", _split_partition),
    ("entropy_gaussian_accuracy", _entropy_accuracy),
    ("entropy_scaling_identity", _entropy_scaling),
    ("entropy_orthonormal_invariance", _entropy_orthonormal),
    ("info_in_weights_monotone", _info_monotone),
    ("tcs_gate", _tcs_gate),
    ("ranking_permutation", _ranking_permutation),
    ("lemma2_monotonicity", _lemma2),
    ("quadratic_task_contrast", _quadratic),
]


def verify_suite(seed: int = 0, overrides: dict | None = None, only=None) -> VerifyReport:
    """Run every check; exceptions inside a check are recorded as failures."""
    prims = _Prims(overrides)
    results = []
    for i, (name, fn) in enumerate(CHECKS):
        if only is not None and name not in only:
            continue
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            ok, measured = fn(prims, rng)
            detail = ""
        except Exception as exc:
            ok, measured, detail = False, {}, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), measured, detail, time.perf_counter() - t0))
    return VerifyReport(seed, results)
