"""Gaussian coding length, information in weights, task complexity score and ranking.

All information quantities are in nats. The additive constant of the
information-in-weights estimate is fixed at zero, so values are relative and
only comparable within one analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from .features import FeatureMatrix
from .regression import WeightStats

__all__ = [
    "EntropyEstimate",
    "ComplexityReport",
    "RankedReport",
    "Lemma2Result",
    "gaussian_entropy",
    "info_in_weights",
    "tcs",
    "lemma2_check",
    "rank_representations",
    "relative_threshold",
    "DEFAULT_ENTROPY_FLOOR",
    "DEFAULT_VARIANCE_FLOOR",
]

DEFAULT_ENTROPY_FLOOR = 1e-12
DEFAULT_VARIANCE_FLOOR = 1e-300
_LOG_2PIE = math.log(2 * math.pi * math.e)


@dataclass(frozen=True)
class EntropyEstimate:
    value_nats: float
    retained_dims: int
    floored_dims: int
    floor: float
    centered: bool = True

    @property
    def dims(self) -> int:
        return self.retained_dims + self.floored_dims


def _as_matrix(features) -> np.ndarray:
    return features.data if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)


def covariance_eigenvalues(x: np.ndarray) -> np.ndarray:
    """Eigenvalues of the sample covariance of ``x`` from the singular values of the centred data.

    Returns all ``D`` values; directions beyond the data rank are exactly zero.
    """
    n, d = x.shape
    centred = x - x.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    lam = np.zeros(d)
    lam[: s.size] = s**2 / (n - 1)
    return lam


def gaussian_entropy(features, floor: float = DEFAULT_ENTROPY_FLOOR) -> EntropyEstimate:
    """``0.5 * sum_i log(2 pi e max(lambda_i, floor))`` over the covariance spectrum.

    Eigenvalues below ``floor`` are counted in ``floored_dims``; the log is badly
    conditioned there and the value is dominated by the floor.
    """
    x = _as_matrix(features)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("entropy estimate needs a 2-D matrix with at least 2 rows")
    if not floor > 0:
        raise ValueError("floor must be positive")
    lam = covariance_eigenvalues(x)
    floored = int(np.sum(lam < floor))
    value = 0.5 * float(np.sum(_LOG_2PIE + np.log(np.maximum(lam, floor))))
    return EntropyEstimate(value, lam.size - floored, floored, float(floor))


def clamped_variance_count(variance, floor: float = DEFAULT_VARIANCE_FLOOR) -> int:
    return int(np.sum(np.asarray(variance) < floor))


def info_in_weights(stats_or_var, floor: float = DEFAULT_VARIANCE_FLOOR) -> float:
    """``-0.5 * sum_ij log(log(1 + var(w_ij)))`` with variances clamped below at ``floor``.

    Accepts :class:`WeightStats` or a raw variance array.
    """
    var = stats_or_var.weight_variance if isinstance(stats_or_var, WeightStats) else stats_or_var
    var = np.asarray(var, dtype=np.float64)
    if not np.all(np.isfinite(var)):
        raise ValueError("weight variances must be finite")
    alpha = np.log1p(np.maximum(var, floor))
    return float(-0.5 * np.sum(np.log(alpha)))


def tcs(info: float, train_loss: float, threshold_t: float) -> tuple[float, float | None]:
    """Task complexity score ``1/info`` if the loss clears the threshold, else 0.

    Returns ``(tcs, log_tcs)``; ``log_tcs`` is ``None`` whenever ``tcs`` is 0.
    """
    if not math.isfinite(info):
        raise ValueError("info must be finite")
    if train_loss < threshold_t and info > 0:
        return 1.0 / info, -math.log(info)
    return 0.0, None


@dataclass
class ComplexityReport:
    dataset_name: str
    representation_name: str
    mode: str
    train_loss: float
    info_in_weights_nats: float
    entropy: EntropyEstimate
    threshold_t: float
    n_features: int
    n_outputs: int
    tcs: float = field(init=False)
    log_tcs: float | None = field(init=False)
    clamped_variances: int = 0
    batch_size_used: int = 0
    whole_set_batch: bool = False

    def __post_init__(self):
        self.tcs, self.log_tcs = tcs(self.info_in_weights_nats, self.train_loss, self.threshold_t)

    def with_threshold(self, t: float) -> "ComplexityReport":
        d = self.to_dict()
        d["entropy"] = EntropyEstimate(**d["entropy"])
        d["threshold_t"] = t
        d.pop("tcs"), d.pop("log_tcs")
        return ComplexityReport(**d)

    @property
    def disregarded(self) -> bool:
        return not self.train_loss < self.threshold_t

    def to_dict(self) -> dict:
        return asdict(self)


def relative_threshold(reports, factor: float = 10.0) -> float:
    """``factor`` times the smallest mean train loss among ``reports``."""
    losses = [r.train_loss for r in reports]
    if not losses:
        raise ValueError("no reports to derive a threshold from")
    return factor * min(losses)


@dataclass(frozen=True)
class RankedReport:
    rank: int
    report: ComplexityReport
    disregarded: bool


def rank_representations(reports, threshold_t: float | None = None) -> list[RankedReport]:
    """Order reports by descending TCS; those failing the loss threshold go last.

    ``threshold_t`` overrides each report's stored threshold (and recomputes
    its TCS). Ties break on lower train loss, then on representation name.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to rank")
    keys = {(r.dataset_name, r.mode) for r in reports}
    if len(keys) > 1:
        raise ValueError(f"reports mix datasets/modes: {sorted(keys)}")
    if threshold_t is not None:
        reports = [r.with_threshold(threshold_t) for r in reports]
    passing = sorted((r for r in reports if not r.disregarded),
                     key=lambda r: (-r.tcs, r.train_loss, r.representation_name))
    failing = sorted((r for r in reports if r.disregarded),
                     key=lambda r: (r.train_loss, r.representation_name))
    ordered = [(r, False) for r in passing] + [(r, True) for r in failing]
    return [RankedReport(i + 1, r, flag) for i, (r, flag) in enumerate(ordered)]


@dataclass(frozen=True)
class Lemma2Result:
    spearman: float | None
    degenerate: bool
    violation: bool
    scaled_entropy: tuple
    info: tuple
    min_correlation: float = 0.9


def lemma2_check(cells, min_correlation: float = 0.9) -> Lemma2Result:
    """Rank agreement between ``(m/n) * H_N`` and measured information in weights.

    ``cells`` are :class:`ComplexityReport` objects (or ``(scaled_entropy, info)``
    pairs) from one synthetic family. The lower bound carries an unidentified
    additive constant, so only the ordering is testable: a Spearman correlation
    below ``min_correlation`` is flagged as a violation. Constant inputs make
    the correlation undefined and are reported as degenerate.
    """
    cells = list(cells)
    if len(cells) < 3:
        raise ValueError("lemma2_check needs at least 3 cells")
    h, info = [], []
    for c in cells:
        if isinstance(c, ComplexityReport):
            h.append(c.n_outputs / c.n_features * c.entropy.value_nats)
            info.append(c.info_in_weights_nats)
        else:
            h.append(float(c[0]))
            info.append(float(c[1]))
    h_arr, i_arr = np.array(h), np.array(info)
    if np.ptp(h_arr) == 0 or np.ptp(i_arr) == 0:
        return Lemma2Result(None, True, False, tuple(h), tuple(info), min_correlation)
    rho = float(stats.spearmanr(h_arr, i_arr).statistic)
    return Lemma2Result(rho, False, rho < min_correlation, tuple(h), tuple(info), min_correlation)
