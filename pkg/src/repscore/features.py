"""Design matrices that stand in for dense and convolutional network inputs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataset import LabeledDataset

__all__ = ["FeatureMatrix", "vectorize", "tile_features", "tile_grid", "extract", "DENSE", "CONV_TILE"]

DENSE = "dense"
CONV_TILE = "conv_tile"


@dataclass(frozen=True)
class FeatureMatrix:
    """``N_rows x D`` features aligned with targets and with the sample each row came from."""

    data: np.ndarray
    targets: np.ndarray
    source_index: np.ndarray
    mode: str

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("feature data must be 2-D")
        if self.data.shape[0] != self.targets.shape[0] or self.data.shape[0] != self.source_index.shape[0]:
            raise ValueError("data, targets and source_index must have equal row counts")
        if self.mode not in (DENSE, CONV_TILE):
            raise ValueError(f"unknown feature mode {self.mode!r}")

    @property
    def feature_dim(self) -> int:
        return self.data.shape[1]

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_sources(self) -> int:
        return int(self.source_index.max()) + 1 if self.n_rows else 0

    def rows_for(self, sources) -> np.ndarray:
        """Row indices belonging to the given source samples, in (sample, tile) order."""
        sources = np.sort(np.asarray(sources, dtype=np.int64))
        return np.flatnonzero(np.isin(self.source_index, sources))


def vectorize(ds: LabeledDataset) -> FeatureMatrix:
    """Flatten each ``H x W x C`` image row-major into one row."""
    if len(ds) == 0:
        raise ValueError("cannot vectorize an empty dataset")
    n = len(ds)
    return FeatureMatrix(
        data=ds.images.reshape(n, -1).copy(),
        targets=ds.targets.copy(),
        source_index=np.arange(n),
        mode=DENSE,
    )


def tile_grid(height: int, width: int, tile: int = 7, stride: int = 2) -> tuple[int, int]:
    """Number of fully-inside tile placements along each axis."""
    if tile < 1 or stride < 1:
        raise ValueError("tile and stride must be positive")
    if height < tile or width < tile:
        raise ValueError(f"image {height}x{width} is smaller than tile {tile}")
    return (height - tile) // stride + 1, (width - tile) // stride + 1


def tile_features(ds: LabeledDataset, tile: int = 7, stride: int = 2) -> FeatureMatrix:
    """Every ``tile x tile x C`` patch at stride offsets becomes a row.

    Each row inherits its image's target. Row order is (sample, tile row,
    tile column); partial edge tiles are dropped.
    """
    n, h, w, c = ds.images.shape
    gh, gw = tile_grid(h, w, tile, stride)
    win = sliding_window_view(ds.images, (tile, tile), axis=(1, 2))[:, ::stride, ::stride]
    # win: (N, gh, gw, C, tile, tile) -> rows of (tile, tile, C) patches
    patches = np.moveaxis(win, 3, -1).reshape(n * gh * gw, tile * tile * c)
    per = gh * gw
    return FeatureMatrix(
        data=np.ascontiguousarray(patches),
        targets=np.repeat(ds.targets, per, axis=0),
        source_index=np.repeat(np.arange(n), per),
        mode=CONV_TILE,
    )


def extract(ds: LabeledDataset, mode: str, tile: int = 7, stride: int = 2) -> FeatureMatrix:
    if mode == DENSE:
        return vectorize(ds)
    if mode == CONV_TILE:
        return tile_features(ds, tile, stride)
    raise ValueError(f"unknown feature mode {mode!r}")
