"""Closed-form ridge regression refit on independently drawn batches.

The spread of the fitted weights across batches is the weight-variance input of
the information-in-weights estimate; the batch residuals give the training loss.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .features import FeatureMatrix

__all__ = ["RidgeConfig", "WeightStats", "ridge_fit", "batched_ridge_runs", "run_rng"]


@dataclass(frozen=True)
class RidgeConfig:
    lam: float = 0.1
    batch_size: int = 256
    runs: int = 10
    seed: int = 0
    ddof: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.runs < 2:
            raise ValueError("runs must be >= 2")
        if self.ddof not in (0, 1):
            raise ValueError("ddof must be 0 (population) or 1 (sample)")


@dataclass(frozen=True)
class WeightStats:
    per_run_weights: np.ndarray     # (runs, m, D)
    per_run_batch_loss: np.ndarray  # (runs,)
    batch_size_used: int
    whole_set_batch: bool
    ddof: int = 0

    @property
    def weight_mean(self) -> np.ndarray:
        return self.per_run_weights.mean(axis=0)

    @property
    def weight_variance(self) -> np.ndarray:
        return self.per_run_weights.var(axis=0, ddof=self.ddof)

    @property
    def mean_train_loss(self) -> float:
        return float(np.mean(self.per_run_batch_loss))

    @property
    def runs(self) -> int:
        return self.per_run_weights.shape[0]

    def to_dict(self) -> dict:
        w = self.per_run_weights
        return {
            "runs": int(w.shape[0]),
            "m_outputs": int(w.shape[1]),
            "feature_dim": int(w.shape[2]),
            "batch_size_used": self.batch_size_used,
            "whole_set_batch": self.whole_set_batch,
            "ddof": self.ddof,
            "per_run_batch_loss": self.per_run_batch_loss.tolist(),
            "mean_train_loss": self.mean_train_loss,
            "weight_mean": self.weight_mean.ravel().tolist(),
            "weight_variance": self.weight_variance.ravel().tolist(),
            "per_run_weights": w.ravel().tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "WeightStats":
        shape = (d["runs"], d["m_outputs"], d["feature_dim"])
        return cls(
            per_run_weights=np.asarray(d["per_run_weights"], dtype=np.float64).reshape(shape),
            per_run_batch_loss=np.asarray(d["per_run_batch_loss"], dtype=np.float64),
            batch_size_used=int(d["batch_size_used"]),
            whole_set_batch=bool(d["whole_set_batch"]),
            ddof=int(d.get("ddof", 0)),
        )


def ridge_fit(x, y, lam: float = 0.1) -> np.ndarray:
    """Solve ``(X^T X + lam I) W^T = X^T Y`` and return ``W`` (``m x D``).

    No intercept is added. With ``lam > 0`` and fewer rows than columns the
    equivalent dual system ``(X X^T + lam I) A = Y``, ``W^T = X^T A`` is solved
    instead, which is cheaper and gives the same weights.

    Raises
    ------
    ValueError
        Row mismatch or negative ``lam``.
    numpy.linalg.LinAlgError
        ``lam == 0`` and ``X^T X`` is singular.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"x {x.shape} and y {y.shape} must be 2-D with equal row counts")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    b, d = x.shape
    try:
        if lam > 0 and b < d:
            gram = x @ x.T
            gram[np.diag_indices_from(gram)] += lam
            a = linalg.solve(gram, y, assume_a="pos")
            return (x.T @ a).T
        gram = x.T @ x
        if lam > 0:
            gram[np.diag_indices_from(gram)] += lam
        elif np.linalg.matrix_rank(gram) < d:
            raise np.linalg.LinAlgError("X^T X is singular and lambda = 0")
        return linalg.solve(gram, x.T @ y, assume_a="pos").T
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(str(exc)) from None


def run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, run])


def _one_run(features: FeatureMatrix, sources: np.ndarray, config: RidgeConfig, run: int):
    n_src = sources.size
    if n_src > config.batch_size:
        batch = run_rng(config.seed, run).choice(sources, size=config.batch_size, replace=False)
    else:
        batch = sources
    rows = features.rows_for(batch)
    x, y = features.data[rows], features.targets[rows]
    w = ridge_fit(x, y, config.lam)
    loss = float(np.mean((x @ w.T - y) ** 2))
    return w, loss


def batched_ridge_runs(features: FeatureMatrix, config: RidgeConfig = RidgeConfig(),
                       executor=None) -> WeightStats:
    """Refit ridge on ``config.runs`` independently drawn batches of source samples.

    Batches are drawn over source images, not rows, so a conv-tile batch
    carries every tile of its images. Run ``r`` uses the generator seeded by
    ``(seed, r)`` and is therefore independent of execution order. If fewer
    samples than ``batch_size`` exist, every run uses the whole set.
    """
    if features.n_rows == 0:
        raise ValueError("empty feature matrix")
    sources = np.unique(features.source_index)
    if executor is None:
        results = [_one_run(features, sources, config, r) for r in range(config.runs)]
    else:
        results = list(executor.map(lambda r: _one_run(features, sources, config, r), range(config.runs)))
    return WeightStats(
        per_run_weights=np.stack([w for w, _ in results]),
        per_run_batch_loss=np.array([l for _, l in results]),
        batch_size_used=int(min(config.batch_size, sources.size)),
        whole_set_batch=bool(sources.size <= config.batch_size),
        ddof=config.ddof,
    )
