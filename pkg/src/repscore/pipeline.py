"""Run (dataset x representation x feature mode) grids and write the comparison artifacts."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorspace import DEFAULT_PREC_EPSILON
from .complexity import (
    DEFAULT_ENTROPY_FLOOR,
    ComplexityReport,
    clamped_variance_count,
    gaussian_entropy,
    info_in_weights,
    rank_representations,
    relative_threshold,
)
from .dataset import LabeledDataset
from .features import CONV_TILE, DENSE, FeatureMatrix, extract
from .regression import RidgeConfig, batched_ridge_runs, ridge_fit
from .representations import REPRESENTATIONS, PairingError, apply_representation, check_pairing

__all__ = ["ThresholdRule", "GridSpec", "CellError", "GridResult", "run_grid", "write_grid", "linear_probe_mse"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdRule:
    """``relative``: ``value`` x the best mean train loss per (dataset, mode); ``absolute``: ``value`` itself."""

    kind: str = "relative"
    value: float = 10.0

    def __post_init__(self):
        if self.kind not in ("relative", "absolute"):
            raise ValueError(f"threshold kind must be 'relative' or 'absolute', got {self.kind!r}")


@dataclass(frozen=True)
class GridSpec:
    datasets: tuple
    representations: tuple = REPRESENTATIONS
    modes: tuple = (DENSE, CONV_TILE)
    ridge: RidgeConfig = RidgeConfig()
    prec_epsilon: float = DEFAULT_PREC_EPSILON
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR
    threshold: ThresholdRule = ThresholdRule()
    tile: int = 7
    stride: int = 2
    bias: bool = False
    jobs: int = 1

    def __post_init__(self):
        ds = self.datasets
        if isinstance(ds, LabeledDataset):
            ds = (ds,)
        object.__setattr__(self, "datasets", tuple(ds))
        object.__setattr__(self, "representations", tuple(self.representations))
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.datasets or not self.representations or not self.modes:
            raise ValueError("datasets, representations and modes must be nonempty")
        for rep in self.representations:
            if rep not in REPRESENTATIONS:
                raise ValueError(f"unknown representation {rep!r}")
        for mode in self.modes:
            if mode not in (DENSE, CONV_TILE):
                raise ValueError(f"unknown feature mode {mode!r}")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError("dataset names must be unique within a grid")

    def cells(self):
        """Yield ``(dataset, rep, mode)`` for accepted pairings, ``(dataset, rep, reason)`` for rejected."""
        accepted, rejected = [], []
        for d in self.datasets:
            for rep in self.representations:
                try:
                    check_pairing(rep, d.channels)
                except PairingError as exc:
                    rejected.append((d.name, rep, str(exc)))
                    continue
                for mode in self.modes:
                    accepted.append((d, rep, mode))
        return accepted, rejected


@dataclass(frozen=True)
class CellError:
    dataset_name: str
    representation_name: str
    mode: str
    error: str


@dataclass
class GridResult:
    reports: list
    rankings: dict
    thresholds: dict
    errors: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)

    def report(self, dataset: str, rep: str, mode: str) -> ComplexityReport:
        for r in self.reports:
            if (r.dataset_name, r.representation_name, r.mode) == (dataset, rep, mode):
                return r
        raise KeyError((dataset, rep, mode))


def _with_bias(fm: FeatureMatrix) -> FeatureMatrix:
    ones = np.ones((fm.n_rows, 1))
    return FeatureMatrix(np.hstack([fm.data, ones]), fm.targets, fm.source_index, fm.mode)


def _run_cell(spec: GridSpec, ds: LabeledDataset, rep: str, mode: str, rep_cache: dict):
    represented = rep_cache[(ds.name, rep)]
    train = represented.subset(represented.indices("train"))
    fm = extract(train, mode, spec.tile, spec.stride)
    entropy = gaussian_entropy(fm, spec.entropy_floor)
    fit_fm = _with_bias(fm) if spec.bias else fm
    stats = batched_ridge_runs(fit_fm, spec.ridge)
    info = info_in_weights(stats)
    report = ComplexityReport(
        dataset_name=ds.name,
        representation_name=rep,
        mode=mode,
        train_loss=stats.mean_train_loss,
        info_in_weights_nats=info,
        entropy=entropy,
        threshold_t=float("inf"),
        n_features=fm.feature_dim,
        n_outputs=fm.targets.shape[1],
        clamped_variances=clamped_variance_count(stats.weight_variance),
        batch_size_used=stats.batch_size_used,
        whole_set_batch=stats.whole_set_batch,
    )
    return report, stats


def run_grid(spec: GridSpec) -> GridResult:
    """Evaluate every accepted cell; failing cells are quarantined, not fatal.

    Representations are applied to the whole dataset (PREC fitted on the
    training split only); features, ridge runs and entropy use the training
    split. Thresholds are set per (dataset, mode) after all cells finish.
    """
    accepted, rejected = spec.cells()
    rep_cache, rep_errors = {}, {}
    for d in spec.datasets:
        for rep in spec.representations:
            if any(r[0] == d.name and r[1] == rep for r in rejected):
                continue
            try:
                rep_cache[(d.name, rep)], _ = apply_representation(d, rep, prec_epsilon=spec.prec_epsilon)
            except Exception as exc:  # quarantined per cell below
                rep_errors[(d.name, rep)] = f"{type(exc).__name__}: {exc}"

    def work(cell):
        d, rep, mode = cell
        if (d.name, rep) in rep_errors:
            return CellError(d.name, rep, mode, rep_errors[(d.name, rep)])
        try:
            return _run_cell(spec, d, rep, mode, rep_cache)
        except Exception as exc:
            log.warning("cell %s/%s/%s failed: %s", d.name, rep, mode, exc)
            return CellError(d.name, rep, mode, f"{type(exc).__name__}: {exc}")

    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            outcomes = list(pool.map(work, accepted))
    else:
        outcomes = [work(c) for c in accepted]

    raw, errors, weights = [], [], {}
    for outcome in outcomes:
        if isinstance(outcome, CellError):
            errors.append(outcome)
        else:
            report, stats = outcome
            raw.append(report)
            weights[(report.dataset_name, report.representation_name, report.mode)] = stats

    thresholds, reports, rankings = {}, [], {}
    groups = {}
    for r in raw:
        groups.setdefault((r.dataset_name, r.mode), []).append(r)
    for key, group in groups.items():
        if spec.threshold.kind == "relative":
            t = relative_threshold(group, spec.threshold.value)
        else:
            t = spec.threshold.value
        thresholds[key] = t
        rankings[key] = rank_representations(group, t)
    for r in raw:
        reports.append(r.with_threshold(thresholds[(r.dataset_name, r.mode)]))
    return GridResult(reports, rankings, thresholds, errors, rejected, weights)


# -- artifacts ---------------------------------------------------------------

def _report_row(r: ComplexityReport) -> dict:
    d = r.to_dict()
    d["threshold_t"] = r.threshold_t
    d["disregarded"] = r.disregarded
    return d


def grid_to_dict(result: GridResult, spec: GridSpec | None = None) -> dict:
    out = {
        "cells": [_report_row(r) for r in result.reports],
        "rankings": [
            {
                "dataset": key[0],
                "mode": key[1],
                "threshold_t": result.thresholds[key],
                "order": [
                    {"rank": e.rank, "representation": e.report.representation_name,
                     "tcs": e.report.tcs, "log_tcs": e.report.log_tcs,
                     "train_loss": e.report.train_loss, "disregarded": e.disregarded}
                    for e in entries
                ],
            }
            for key, entries in result.rankings.items()
        ],
        "errors": [vars(e) for e in result.errors],
        "rejected": [{"dataset": d, "representation": r, "reason": why} for d, r, why in result.rejected],
    }
    if spec is not None:
        out["config"] = {
            "datasets": [d.name for d in spec.datasets],
            "representations": list(spec.representations),
            "modes": list(spec.modes),
            "lambda": spec.ridge.lam,
            "batch_size": spec.ridge.batch_size,
            "runs": spec.ridge.runs,
            "seed": spec.ridge.seed,
            "variance_ddof": spec.ridge.ddof,
            "prec_epsilon": spec.prec_epsilon,
            "entropy_floor": spec.entropy_floor,
            "threshold_rule": {"kind": spec.threshold.kind, "value": spec.threshold.value},
            "tile": spec.tile,
            "stride": spec.stride,
            "bias": spec.bias,
        }
    return out


def grid_csv(result: GridResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "representation", "mode", "train_loss", "log_tcs", "entropy"])
    for r in result.reports:
        w.writerow([r.dataset_name, r.representation_name, r.mode, repr(r.train_loss),
                    "" if r.log_tcs is None else repr(r.log_tcs), repr(r.entropy.value_nats)])
    return buf.getvalue()


def grid_ranking_text(result: GridResult) -> str:
    lines = []
    for (dataset, mode), entries in result.rankings.items():
        lines.append(f"# {dataset} / {mode}  (threshold t = {result.thresholds[(dataset, mode)]:.6g})")
        for e in entries:
            r = e.report
            score = "-" if r.log_tcs is None else f"{r.log_tcs:.4f}"
            flag = "  [disregarded: train loss >= t]" if e.disregarded else ""
            lines.append(f"{e.rank:>2}. {r.representation_name:<9} ln TCS = {score:>10}  "
                         f"train loss = {r.train_loss:.3e}{flag}")
        lines.append("")
    for e in result.errors:
        lines.append(f"! {e.dataset_name}/{e.representation_name}/{e.mode} failed: {e.error}")
    for d, rep, why in result.rejected:
        lines.append(f"- {d}/{rep} skipped: {why}")
    return "\n".join(lines).rstrip("\n") + "\n"


def write_grid(result: GridResult, out_dir, spec: GridSpec | None = None) -> Path:
    """Write ``report.json``, ``report.csv``, ``ranking.txt`` and per-cell ``weights.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(grid_to_dict(result, spec), indent=2, sort_keys=True, allow_nan=False)
    (out / "report.json").write_text(payload + "\n", encoding="utf-8")
    (out / "report.csv").write_text(grid_csv(result), encoding="utf-8")
    (out / "ranking.txt").write_text(grid_ranking_text(result), encoding="utf-8")
    for (dataset, rep, mode), stats in result.weights.items():
        cell = out / f"cell_{dataset}_{rep}_{mode}"
        cell.mkdir(exist_ok=True)
        (cell / "weights.json").write_text(stats.to_json(), encoding="utf-8")
    return out


def linear_probe_mse(ds: LabeledDataset, lam: float = 0.0, bias: bool = True) -> float:
    """Training MSE of one least-squares (ridge) fit over the whole dataset."""
    x = ds.images.reshape(len(ds), -1)
    if bias:
        x = np.hstack([x, np.ones((len(ds), 1))])
    w = ridge_fit(x, ds.targets, lam)
    return float(np.mean((x @ w.T - ds.targets) ** 2))
