"""Orthonormal 2-D DCT-II over the full frame and over non-overlapping blocks, per channel.

Arrays are laid out ``(..., H, W, C)``; the transforms act on the ``H`` and
``W`` axes so stacks of images go through in one call.
"""
from __future__ import annotations

import numpy as np
from scipy import fft

from .dataset import ImageTensor

__all__ = [
    "dct2",
    "idct2",
    "block_dct",
    "block_idct",
    "dct2_array",
    "idct2_array",
    "block_dct_array",
    "block_idct_array",
    "dct2_reference",
    "dct_matrix",
]

_AXES = (-3, -2)


def dct2_array(arr: np.ndarray) -> np.ndarray:
    return fft.dctn(np.asarray(arr, dtype=np.float64), type=2, axes=_AXES, norm="ortho")


def idct2_array(arr: np.ndarray) -> np.ndarray:
    return fft.idctn(np.asarray(arr, dtype=np.float64), type=2, axes=_AXES, norm="ortho")


def dct2(img: ImageTensor) -> ImageTensor:
    """Full-frame orthonormal DCT-II; coefficient ``(0, 0)`` is the DC term."""
    return ImageTensor(dct2_array(img.data), dict(img.meta))


def idct2(img: ImageTensor) -> ImageTensor:
    return ImageTensor(idct2_array(img.data), dict(img.meta))


def _padded(n: int, block: int) -> int:
    return -(-n // block) * block


def block_dct_array(arr: np.ndarray, block: int = 8) -> np.ndarray:
    """Edge-pad ``H`` and ``W`` up to multiples of ``block``, then DCT each tile in place."""
    if block < 1:
        raise ValueError("block must be >= 1")
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[-3], arr.shape[-2]
    ph, pw = _padded(h, block) - h, _padded(w, block) - w
    if ph or pw:
        pad = [(0, 0)] * (arr.ndim - 3) + [(0, ph), (0, pw), (0, 0)]
        arr = np.pad(arr, pad, mode="edge")
    lead = arr.shape[:-3]
    H, W, C = arr.shape[-3:]
    tiles = arr.reshape(*lead, H // block, block, W // block, block, C)
    coef = fft.dctn(tiles, type=2, axes=(-4, -2), norm="ortho")
    return coef.reshape(*lead, H, W, C)


def block_idct_array(arr: np.ndarray, block: int = 8, orig_hw: tuple[int, int] | None = None) -> np.ndarray:
    """Inverse of :func:`block_dct_array`, cropping back to ``orig_hw`` if given."""
    if block < 1:
        raise ValueError("block must be >= 1")
    arr = np.asarray(arr, dtype=np.float64)
    lead = arr.shape[:-3]
    H, W, C = arr.shape[-3:]
    if H % block or W % block:
        raise ValueError(f"coefficient array {H}x{W} is not tiled by block {block}")
    tiles = arr.reshape(*lead, H // block, block, W // block, block, C)
    out = fft.idctn(tiles, type=2, axes=(-4, -2), norm="ortho").reshape(*lead, H, W, C)
    if orig_hw is not None:
        out = out[..., : orig_hw[0], : orig_hw[1], :]
    return out


def block_dct(img: ImageTensor, block: int = 8) -> ImageTensor:
    """Blockwise DCT; the result's ``meta`` records block size and original size."""
    coef = block_dct_array(img.data, block)
    meta = {**img.meta, "block": block, "orig_height": img.height, "orig_width": img.width}
    return ImageTensor(coef, meta)


def block_idct(img: ImageTensor, block: int = 8) -> ImageTensor:
    stored = img.meta.get("block")
    if stored is not None and stored != block:
        raise ValueError(f"image was transformed with block={stored}, not {block}")
    orig = None
    if "orig_height" in img.meta:
        orig = (img.meta["orig_height"], img.meta["orig_width"])
    meta = {k: v for k, v in img.meta.items() if k not in ("block", "orig_height", "orig_width")}
    return ImageTensor(block_idct_array(img.data, block, orig), meta)


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``M`` with ``coef = M @ signal``."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    m[0] *= np.sqrt(1.0 / n)
    m[1:] *= np.sqrt(2.0 / n)
    return m


def dct2_reference(x: np.ndarray) -> np.ndarray:
    """Definitional O(H^2 W^2) double sum for one ``H x W`` channel.

    ``X[k, l] = a(k) a(l) sum_ij x[i, j] cos(pi (2i+1) k / 2H) cos(pi (2j+1) l / 2W)``
    with ``a(0) = sqrt(1/N)`` and ``a(k>0) = sqrt(2/N)``.
    """
    x = np.asarray(x, dtype=np.float64)
    H, W = x.shape
    out = np.empty((H, W))
    for k in range(H):
        ak = np.sqrt((1.0 if k == 0 else 2.0) / H)
        for l in range(W):
            al = np.sqrt((1.0 if l == 0 else 2.0) / W)
            s = 0.0
            for i in range(H):
                ci = np.cos(np.pi * (2 * i + 1) * k / (2 * H))
                for j in range(W):
                    s += x[i, j] * ci * np.cos(np.pi * (2 * j + 1) * l / (2 * W))
            out[k, l] = ak * al * s
    return out
