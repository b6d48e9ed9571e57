"""Datasets: image ingestion from CSV manifests and synthetic tasks with known ground truth.

Every sample is an ``H x W x C`` array.  Synthetic design vectors are stored as
degenerate ``1 x n x 1`` images so that representations and feature extraction
see one input type.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "ImageTensor",
    "LabeledDataset",
    "SyntheticSpec",
    "ManifestError",
    "EmptyManifestError",
    "MissingImageError",
    "ImageShapeError",
    "TargetParseError",
    "load_image_dir",
    "make_synthetic_regression",
    "make_quadratic_task",
    "make_texture_classification",
    "default_lemma2_spec",
    "split_dataset",
    "save_dataset",
    "load_dataset",
]

REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass(frozen=True)
class ImageTensor:
    """One ``height x width x channels`` sample in any representation.

    ``meta`` carries representation bookkeeping, e.g. the original size of a
    block-DCT image before padding.
    """

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"ImageTensor needs a non-empty H x W x C array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ImageTensor values must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LabeledDataset:
    """Uniform-shape samples, an ``N x m`` target matrix and optional splits.

    Samples live in one stacked ``(N, H, W, C)`` array; :attr:`samples` gives
    the per-image :class:`ImageTensor` view.
    """

    images: np.ndarray
    targets: np.ndarray
    task_kind: str = REGRESSION
    class_names: tuple = ()
    split: dict | None = None
    name: str = "dataset"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if images.ndim != 4:
            raise ValueError(f"images must be (N, H, W, C), got {images.shape}")
        if targets.ndim == 1:
            targets = targets[:, None]
        if targets.shape[0] != images.shape[0]:
            raise ValueError(
                f"{images.shape[0]} samples but {targets.shape[0]} target rows"
            )
        if self.task_kind not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        if not np.all(np.isfinite(images)):
            raise ValueError("sample values must be finite")
        if self.task_kind == CLASSIFICATION and len(targets):
            ones = np.sum(targets == 1.0, axis=1)
            zeros = np.sum(targets == 0.0, axis=1)
            if not (np.all(ones == 1) and np.all(ones + zeros == targets.shape[1])):
                raise ValueError("classification targets must be one-hot rows")
        if self.split is not None:
            _check_split(self.split, images.shape[0])
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def samples(self) -> list[ImageTensor]:
        return [ImageTensor(img, dict(self.meta)) for img in self.images]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.images.shape[1:]

    @property
    def channels(self) -> int:
        return self.images.shape[3]

    @property
    def class_count(self) -> int:
        return len(self.class_names) if self.task_kind == CLASSIFICATION else 0

    def indices(self, part: str = "train") -> np.ndarray:
        """Indices of a split part; the whole set if the dataset is unsplit."""
        if self.split is None:
            return np.arange(len(self))
        return np.asarray(self.split[part], dtype=np.int64)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, images=self.images[idx], targets=self.targets[idx], split=None)

    def with_images(self, images, **meta) -> "LabeledDataset":
        return replace(self, images=images, meta={**self.meta, **meta})


@dataclass(frozen=True)
class SyntheticSpec:
    """Generating model ``y = x w*^T + eps`` with ``x ~ N(0, covariance)``."""

    covariance: np.ndarray
    true_weights: np.ndarray
    noise_sigma: float
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        w = np.atleast_2d(np.asarray(self.true_weights, dtype=np.float64))
        if cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be square")
        if w.shape[1] != cov.shape[0]:
            raise ValueError(f"true_weights {w.shape} do not match n_features={cov.shape[0]}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "true_weights", w)

    @property
    def n_features(self) -> int:
        return self.covariance.shape[0]

    @property
    def m_outputs(self) -> int:
        return self.true_weights.shape[0]


class ManifestError(ValueError):
    """Problem with a manifest row; ``row`` is the 1-based data row (header excluded)."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyManifestError(ManifestError):
    pass


class MissingImageError(ManifestError):
    pass


class ImageShapeError(ManifestError):
    pass


class TargetParseError(ManifestError):
    pass


def _decode(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode in ("P", "RGBA", "CMYK", "YCbCr", "LAB", "HSV"):
            im = im.convert("RGB")
        elif im.mode == "LA":
            im = im.convert("L")
        if im.mode == "1":
            arr = np.asarray(im, dtype=np.float64)
            return arr[:, :, None]
        arr = np.asarray(im)
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16 or im.mode.startswith("I;16"):
        scale = 65535.0
    elif np.issubdtype(arr.dtype, np.integer):
        # 32-bit "I" mode images written from 16-bit sources
        scale = 65535.0 if arr.max(initial=0) <= 65535 else float(np.iinfo(arr.dtype).max)
    else:
        scale = 1.0
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def load_image_dir(root_path, manifest_path=None, task_kind: str = CLASSIFICATION,
                   name: str | None = None) -> LabeledDataset:
    """Load images listed in a ``path,target`` CSV manifest.

    Parameters
    ----------
    root_path
        Directory that relative image paths are resolved against.
    manifest_path
        CSV file; defaults to ``root_path/manifest.csv``.
    task_kind
        ``"classification"`` (target is a label string, one-hot encoded by
        sorted label order) or ``"regression"`` (target is ``;``-separated reals).

    Raises
    ------
    EmptyManifestError, MissingImageError, ImageShapeError, TargetParseError
        Each names the offending manifest row.
    """
    root = Path(root_path)
    manifest = Path(manifest_path) if manifest_path is not None else root / "manifest.csv"
    with open(manifest, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["path", "target"]:
            raise ManifestError(f"{manifest}: header must be 'path,target'")
        rows = [(r["path"].strip(), (r["target"] or "").strip()) for r in reader]
    if not rows:
        raise EmptyManifestError(f"{manifest}: manifest has no data rows")

    images = []
    for i, (rel, _) in enumerate(rows, start=1):
        path = root / rel
        if not path.is_file():
            raise MissingImageError(f"image file {str(path)!r} not found", row=i)
        arr = _decode(path)
        if images and arr.shape != images[0].shape:
            raise ImageShapeError(
                f"{rel!r} decodes to shape {arr.shape}, expected {images[0].shape}", row=i
            )
        images.append(arr)

    if task_kind == CLASSIFICATION:
        labels = [t for _, t in rows]
        class_names = tuple(sorted(set(labels)))
        index = {c: k for k, c in enumerate(class_names)}
        targets = np.zeros((len(rows), len(class_names)))
        targets[np.arange(len(rows)), [index[c] for c in labels]] = 1.0
    elif task_kind == REGRESSION:
        class_names = ()
        parsed = []
        for i, (_, t) in enumerate(rows, start=1):
            try:
                vals = [float(v) for v in t.split(";")]
            except ValueError:
                raise TargetParseError(f"non-numeric regression target {t!r}", row=i) from None
            if not np.all(np.isfinite(vals)):
                raise TargetParseError(f"non-finite regression target {t!r}", row=i)
            if parsed and len(vals) != len(parsed[0]):
                raise TargetParseError(
                    f"target has {len(vals)} values, expected {len(parsed[0])}", row=i
                )
            parsed.append(vals)
        targets = np.array(parsed)
    else:
        raise ValueError(f"unknown task kind {task_kind!r}")

    return LabeledDataset(
        images=np.stack(images),
        targets=targets,
        task_kind=task_kind,
        class_names=class_names,
        name=name or root.resolve().name,
    )


def make_synthetic_regression(spec: SyntheticSpec, name: str = "lemma2") -> LabeledDataset:
    """Draw ``x ~ N(0, covariance)`` and ``y = x w*^T + sigma * N(0, I)``.

    ``x`` is produced as ``z L^T`` with ``L`` the Cholesky factor, so two specs
    that differ only by a covariance scale ``a`` and share a seed give designs
    that differ exactly by ``sqrt(a)``.
    """
    try:
        chol = np.linalg.cholesky(spec.covariance)
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not positive definite") from None
    if not np.allclose(spec.covariance, spec.covariance.T, rtol=0, atol=1e-12 * np.abs(spec.covariance).max()):
        raise ValueError("covariance is not symmetric")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.sample_count, spec.n_features))
    noise = rng.standard_normal((spec.sample_count, spec.m_outputs))
    x = z @ chol.T
    y = x @ spec.true_weights.T + spec.noise_sigma * noise
    return LabeledDataset(
        images=x[:, None, :, None],
        targets=y,
        task_kind=REGRESSION,
        name=name,
        meta={"generator": "synthetic_regression"},
    )


def default_lemma2_spec(n: int = 10, m: int = 2, sample_count: int = 4096, sigma: float = 0.1,
                        cov_scale: float = 1.0, seed: int = 0) -> SyntheticSpec:
    """A fixed member of the synthetic linear family.

    Base covariance is the AR(1) matrix ``0.5**|i-j|`` (condition number < 9)
    times ``cov_scale``; true weights are standard normal draws from ``seed``.
    """
    idx = np.arange(n)
    base = 0.5 ** np.abs(idx[:, None] - idx[None, :])
    w = np.random.default_rng([seed, 1]).standard_normal((m, n))
    return SyntheticSpec(
        covariance=cov_scale * base,
        true_weights=w,
        noise_sigma=sigma,
        sample_count=sample_count,
        seed=seed,
    )


def make_quadratic_task(sample_count: int, sigma: float, seed: int = 0):
    """``y = x**2 + N(0, sigma**2)`` with ``x ~ U[0, 1]``.

    Returns the pair ``(r1, r2)``: the same targets seen through the feature
    ``x`` and through ``x**2``.
    """
    if sample_count < 10:
        raise ValueError("sample_count must be at least 10")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, sample_count)
    y = x**2 + sigma * rng.standard_normal(sample_count)
    r1 = LabeledDataset(x[:, None, None, None], y[:, None], name="quadratic_r1",
                        meta={"generator": "quadratic", "feature": "x"})
    r2 = LabeledDataset((x**2)[:, None, None, None], y[:, None], name="quadratic_r2",
                        meta={"generator": "quadratic", "feature": "x^2"})
    return r1, r2


def make_texture_classification(n_per_class: int = 80, size: int = 32, n_classes: int = 3,
                                channels: int = 3, noise: float = 0.05, seed: int = 0) -> LabeledDataset:
    """Oriented colour gratings with random phase and frequency jitter.

    Class ``k`` has orientation ``k * pi / n_classes`` and its own channel
    tint; pixel values are clipped into ``[0, 1]``.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    tints = 0.4 + 0.6 * rng.uniform(size=(n_classes, channels))
    images, labels = [], []
    for k in range(n_classes):
        theta = np.pi * k / n_classes
        for _ in range(n_per_class):
            freq = rng.uniform(3.0, 5.0)
            phase = rng.uniform(0, 2 * np.pi)
            wave = 0.5 + 0.4 * np.sin(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
            img = wave[:, :, None] * tints[k] + noise * rng.standard_normal((size, size, channels))
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(k)
    labels = np.array(labels)
    order = rng.permutation(len(labels))
    targets = np.eye(n_classes)[labels[order]]
    return LabeledDataset(
        images=np.stack(images)[order],
        targets=targets,
        task_kind=CLASSIFICATION,
        class_names=tuple(f"class{k}" for k in range(n_classes)),
        name="textures",
    )


def _check_split(split: dict, n: int):
    seen = set()
    for part in ("train", "val", "test"):
        idx = np.asarray(split.get(part, ()), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError(f"split {part!r} has indices outside 0..{n - 1}")
        s = set(idx.tolist())
        if len(s) != idx.size or seen & s:
            raise ValueError("split index sets must be disjoint and duplicate-free")
        seen |= s


def split_dataset(ds: LabeledDataset, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> LabeledDataset:
    """Shuffle indices and cut them into train/val/test parts.

    Part sizes are ``floor(f * N)`` for val and test; train takes the rest, so
    ``N=10, (0.8, 0.1, 0.1)`` gives ``(8, 1, 1)``.
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (3,) or np.any(fr < 0) or np.any(fr > 1) or abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three nonnegative reals summing to 1, got {fractions}")
    n = len(ds)
    perm = np.random.default_rng(seed).permutation(n)
    # round() guards against 0.1 * 10 landing on 0.9999999
    n_val = int(np.floor(round(fr[1] * n, 9)))
    n_test = int(np.floor(round(fr[2] * n, 9)))
    n_train = n - n_val - n_test
    split = {
        "train": np.sort(perm[:n_train]),
        "val": np.sort(perm[n_train:n_train + n_val]),
        "test": np.sort(perm[n_train + n_val:]),
    }
    return replace(ds, split=split)


# -- dataset directories -----------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def save_dataset(ds: LabeledDataset, out_dir, extra: dict | None = None) -> Path:
    """Write ``manifest.json`` (metadata) and ``data.npz`` (float64 arrays)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    arrays = {"images": ds.images, "targets": ds.targets}
    if ds.split is not None:
        for part in ("train", "val", "test"):
            arrays[f"split_{part}"] = np.asarray(ds.split[part], dtype=np.int64)
    # fixed member order and no compression metadata keeps the file byte-stable
    with open(out / "data.npz", "wb") as fh:
        np.savez(fh, **arrays)
    manifest = {
        "format": "repscore-dataset/1",
        "name": ds.name,
        "task_kind": ds.task_kind,
        "class_names": list(ds.class_names),
        "shape": list(ds.images.shape),
        "has_split": ds.split is not None,
        "meta": _jsonable(ds.meta),
    }
    if extra:
        manifest.update(_jsonable(extra))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_dataset(path, task_kind: str = CLASSIFICATION) -> LabeledDataset:
    """Load a dataset directory: ``manifest.json`` + ``data.npz``, or ``manifest.csv`` + images."""
    root = Path(path)
    if (root / "manifest.json").is_file():
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        with np.load(root / "data.npz") as z:
            images, targets = z["images"], z["targets"]
            split = None
            if manifest.get("has_split"):
                split = {p: z[f"split_{p}"] for p in ("train", "val", "test")}
        return LabeledDataset(
            images=images,
            targets=targets,
            task_kind=manifest["task_kind"],
            class_names=tuple(manifest.get("class_names", ())),
            split=split,
            name=manifest.get("name", root.name),
            meta=manifest.get("meta", {}),
        )
    if (root / "manifest.csv").is_file():
        return load_image_dir(root, root / "manifest.csv", task_kind=task_kind)
    raise FileNotFoundError(f"{os.fspath(root)}: no manifest.json or manifest.csv")
