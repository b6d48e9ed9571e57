"""Channel-space representations: full-range BT.601 YCbCr and PREC channel preconditioning."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ImageTensor, LabeledDataset

__all__ = [
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "PrecTransform",
    "fit_prec",
    "apply_prec",
    "invert_prec",
    "DEFAULT_PREC_EPSILON",
]

DEFAULT_PREC_EPSILON = 1e-8

# rows: Y, Cb, Cr applied to (R, G, B)
_KR, _KB = 0.299, 0.114
_KG = 1.0 - _KR - _KB
_YCBCR = np.array([
    [_KR, _KG, _KB],
    [-_KR / 1.772, -_KG / 1.772, (1.0 - _KB) / 1.772],
    [(1.0 - _KR) / 1.402, -_KG / 1.402, -_KB / 1.402],
])
_YCBCR_INV = np.linalg.inv(_YCBCR)
_OFFSET = np.array([0.0, 0.5, 0.5])


def _three_channels(arr: np.ndarray):
    if arr.shape[-1] != 3:
        raise ValueError(f"YCbCr conversion needs 3 channels, got {arr.shape[-1]}")


def ycbcr_array(arr: np.ndarray) -> np.ndarray:
    """RGB -> YCbCr on any array whose last axis holds the 3 channels."""
    arr = np.asarray(arr, dtype=np.float64)
    _three_channels(arr)
    return arr @ _YCBCR.T + _OFFSET


def ycbcr_inverse_array(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    _three_channels(arr)
    return (arr - _OFFSET) @ _YCBCR_INV.T


def rgb_to_ycbcr(img: ImageTensor) -> ImageTensor:
    """Full-range BT.601: ``Y = .299R + .587G + .114B``, chroma centred on 0.5."""
    return ImageTensor(ycbcr_array(img.data), dict(img.meta))


def ycbcr_to_rgb(img: ImageTensor) -> ImageTensor:
    return ImageTensor(ycbcr_inverse_array(img.data), dict(img.meta))


@dataclass(frozen=True)
class PrecTransform:
    """Channel map ``p -> U p`` with ``U = diag(lambda + eps)^(-1/2) V^T``.

    Rows of ``matrix_u`` are eigenvectors of the pooled channel second moment,
    ordered by descending eigenvalue and scaled by the regularised inverse
    square root of that eigenvalue.
    """

    matrix_u: np.ndarray
    matrix_u_inverse: np.ndarray
    epsilon: float
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.matrix_u, dtype=np.float64)
        u_inv = np.asarray(self.matrix_u_inverse, dtype=np.float64)
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u_inv.shape != u.shape:
            raise ValueError("matrix_u and its inverse must be matching square matrices")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "matrix_u", u)
        object.__setattr__(self, "matrix_u_inverse", u_inv)
        if self.eigenvalues is not None:
            object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=np.float64))

    @property
    def channel_count(self) -> int:
        return self.matrix_u.shape[0]

    def to_json(self) -> str:
        payload = {
            "matrix_u": self.matrix_u.tolist(),
            "matrix_u_inverse": self.matrix_u_inverse.tolist(),
            "epsilon": self.epsilon,
            "eigenvalues": None if self.eigenvalues is None else self.eigenvalues.tolist(),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PrecTransform":
        d = json.loads(text)
        return cls(np.array(d["matrix_u"]), np.array(d["matrix_u_inverse"]),
                   float(d["epsilon"]), d.get("eigenvalues"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PrecTransform":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape[-1] != self.channel_count:
            raise ValueError(f"transform expects {self.channel_count} channels, got {arr.shape[-1]}")
        return arr @ self.matrix_u.T

    def invert_array(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape[-1] != self.channel_count:
            raise ValueError(f"transform expects {self.channel_count} channels, got {arr.shape[-1]}")
        return arr @ self.matrix_u_inverse.T


def channel_second_moment(images: np.ndarray) -> np.ndarray:
    """Uncentred ``E[x x^T]`` over all images and pixels; ``images`` is ``(..., C)``."""
    pix = np.asarray(images, dtype=np.float64)
    pix = pix.reshape(-1, pix.shape[-1])
    return pix.T @ pix / pix.shape[0]


def fit_prec(ds, epsilon: float = DEFAULT_PREC_EPSILON) -> PrecTransform:
    """Fit the channel preconditioner to a dataset (or an ``(N, H, W, C)`` array)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    images = ds.images if isinstance(ds, LabeledDataset) else np.asarray(ds, dtype=np.float64)
    if images.size == 0:
        raise ValueError("cannot fit PREC on an empty dataset")
    if images.shape[-1] < 2:
        raise ValueError("PREC needs at least 2 channels")
    sigma = channel_second_moment(images)
    if not np.any(sigma):
        raise np.linalg.LinAlgError("channel second moment is all zero; eigendecomposition is degenerate")
    lam, vecs = np.linalg.eigh(sigma)
    order = np.argsort(-lam, kind="stable")
    lam = np.clip(lam[order], 0.0, None)
    vt = vecs[:, order].T
    # fix each eigenvector's sign: largest-magnitude entry positive
    pivots = vt[np.arange(len(vt)), np.argmax(np.abs(vt), axis=1)]
    vt = vt * np.where(pivots < 0, -1.0, 1.0)[:, None]
    scale = np.sqrt(lam + epsilon)
    u = vt / scale[:, None]
    u_inv = vt.T * scale[None, :]
    return PrecTransform(u, u_inv, float(epsilon), lam)


def apply_prec(t: PrecTransform, img: ImageTensor) -> ImageTensor:
    return ImageTensor(t.apply_array(img.data), dict(img.meta))


def invert_prec(t: PrecTransform, img: ImageTensor) -> ImageTensor:
    return ImageTensor(t.invert_array(img.data), dict(img.meta))
