"""PNG input/output and reflect padding for size-constrained transforms."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image


def read_png(path) -> np.ndarray:
    """Decode an image file to 8-bit RGB (H, W, 3); alpha is dropped with a warning."""
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA", "PA") or "transparency" in im.info:
            warnings.warn(f"{path}: alpha channel stripped", UserWarning, stacklevel=2)
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=np.uint8).copy()


def load_image(path, dtype=np.float64) -> np.ndarray:
    """Read a PNG and normalise to [0, 1] by dividing by 255."""
    return read_png(path).astype(dtype) / 255.0


def to_uint8(x: np.ndarray) -> np.ndarray:
    if x.dtype == np.uint8:
        return x
    return np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path, x: np.ndarray) -> None:
    """Write an (H, W, 3) or (H, W) image; floats are clipped to [0, 1] and rounded."""
    arr = to_uint8(np.asarray(x))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB" if arr.ndim == 3 else "L").save(path, format="PNG")


def save_ssim_map(path, smap: np.ndarray) -> None:
    """Store an SSIM map as grayscale, mapping [-1, 1] linearly onto [0, 255]."""
    save_png(path, (np.asarray(smap) + 1.0) / 2.0)


def pad_to_multiple(x: np.ndarray, multiple: int):
    """Reflect-pad the bottom/right edges so H and W are multiples of ``multiple``.

    Returns the padded image and the original (H, W) for :func:`crop`.
    """
    h, w = x.shape[0], x.shape[1]
    ph, pw = -h % multiple, -w % multiple
    if ph == 0 and pw == 0:
        return x, (h, w)
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (x.ndim - 2)
    mode = "reflect" if h > ph and w > pw else "symmetric"
    return np.pad(x, pad, mode=mode), (h, w)


def crop(x: np.ndarray, size) -> np.ndarray:
    return x[: size[0], : size[1]]
