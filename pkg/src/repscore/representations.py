"""Dataset-level application of the five invertible representations."""
from __future__ import annotations

import numpy as np

from . import colorspace, spectral
from .dataset import LabeledDataset

__all__ = ["REPRESENTATIONS", "COLOR_ONLY", "PairingError", "check_pairing", "apply_representation", "invert_representation"]

REPRESENTATIONS = ("rgb", "ycbcr", "prec", "dct", "blockdct")
COLOR_ONLY = ("ycbcr", "prec")


class PairingError(ValueError):
    """Representation not defined for the dataset's channel count."""


def check_pairing(rep: str, channels: int) -> None:
    if rep not in REPRESENTATIONS:
        raise ValueError(f"unknown representation {rep!r}; choose from {', '.join(REPRESENTATIONS)}")
    if rep in COLOR_ONLY and channels == 1:
        raise PairingError(
            f"{rep} is a colour-channel representation and is not used for single-channel "
            "(grayscale) data; use rgb, dct or blockdct"
        )
    if rep == "ycbcr" and channels != 3:
        raise PairingError(f"ycbcr needs 3 channels, dataset has {channels}")


def apply_representation(ds: LabeledDataset, rep: str, prec=None, prec_epsilon: float = colorspace.DEFAULT_PREC_EPSILON,
                         fit_on=None, block: int = 8):
    """Map every sample of ``ds`` through ``rep``.

    For ``prec`` the transform is fitted on ``fit_on`` (indices; default the
    training split) unless ``prec`` is given. Returns ``(dataset, prec)`` where
    ``prec`` is the transform used, or ``None``.
    """
    check_pairing(rep, ds.channels)
    imgs = ds.images
    if rep == "rgb":
        return ds, None
    if rep == "ycbcr":
        return ds.with_images(colorspace.ycbcr_array(imgs), representation=rep), None
    if rep == "prec":
        if prec is None:
            idx = ds.indices("train") if fit_on is None else np.asarray(fit_on)
            prec = colorspace.fit_prec(imgs[idx], prec_epsilon)
        return ds.with_images(prec.apply_array(imgs), representation=rep), prec
    if rep == "dct":
        return ds.with_images(spectral.dct2_array(imgs), representation=rep), None
    h, w = ds.image_shape[:2]
    out = ds.with_images(spectral.block_dct_array(imgs, block), representation=rep,
                         block=block, orig_height=h, orig_width=w)
    return out, None


def invert_representation(ds: LabeledDataset, rep: str, prec=None, block: int | None = None) -> LabeledDataset:
    check_pairing(rep, ds.channels)
    imgs = ds.images
    meta = {k: v for k, v in ds.meta.items() if k not in ("representation", "block", "orig_height", "orig_width")}
    if rep == "rgb":
        out = imgs
    elif rep == "ycbcr":
        out = colorspace.ycbcr_inverse_array(imgs)
    elif rep == "prec":
        if prec is None:
            raise ValueError("inverting prec needs the fitted transform")
        out = prec.invert_array(imgs)
    elif rep == "dct":
        out = spectral.idct2_array(imgs)
    else:
        stored = ds.meta.get("block")
        block = block or stored or 8
        if stored is not None and stored != block:
            raise ValueError(f"dataset was transformed with block={stored}, not {block}")
        orig = None
        if "orig_height" in ds.meta:
            orig = (int(ds.meta["orig_height"]), int(ds.meta["orig_width"]))
        out = spectral.block_idct_array(imgs, block, orig)
    return LabeledDataset(out, ds.targets, ds.task_kind, ds.class_names, ds.split, ds.name, meta)
