"""Single-level orthonormal 2D Haar wavelet transform."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import data_of
from .errors import ShapeError

LOW_PASS = np.array([1.0, 1.0]) / np.sqrt(2.0)
HIGH_PASS = np.array([1.0, -1.0]) / np.sqrt(2.0)


class WaveletBands(NamedTuple):
    """Half-resolution sub-bands; LH is the vertical-detail band, HL horizontal."""

    ll: object
    lh: object
    hl: object
    hh: object

    @property
    def shape(self):
        return data_of(self.ll).shape


def _analysis(x: np.ndarray) -> np.ndarray:
    a = x[..., 0::2, 0::2, :]
    b = x[..., 0::2, 1::2, :]
    c = x[..., 1::2, 0::2, :]
    d = x[..., 1::2, 1::2, :]
    return 0.5 * np.stack([a + b + c + d, a + b - c - d, a - b + c - d, a - b - c + d])


def _synthesis(s: np.ndarray) -> np.ndarray:
    ll, lh, hl, hh = s
    *lead, h, w, c = ll.shape
    out = np.empty((*lead, 2 * h, 2 * w, c), dtype=np.result_type(ll, lh, hl, hh))
    out[..., 0::2, 0::2, :] = 0.5 * (ll + lh + hl + hh)
    out[..., 0::2, 1::2, :] = 0.5 * (ll + lh - hl - hh)
    out[..., 1::2, 0::2, :] = 0.5 * (ll - lh + hl - hh)
    out[..., 1::2, 1::2, :] = 0.5 * (ll - lh - hl + hh)
    return out


def haar_analysis(x):
    """Stacked sub-bands (4, ..., H/2, W/2, C) in LL, LH, HL, HH order.

    The transform is orthonormal, so its adjoint (used for the gradient) is
    the synthesis operator.
    """
    xd = data_of(x)
    if xd.ndim < 3:
        raise ShapeError(f"expected (..., H, W, C), got {xd.shape}")
    h, w = xd.shape[-3], xd.shape[-2]
    if h % 2 or w % 2:
        raise ShapeError(f"Haar DWT needs even height and width, got {(h, w)}")
    return ad._wrap(_analysis(xd), (x,), lambda g: (_synthesis(g),), ad.is_tensor(x))


def haar_synthesis(stacked):
    """Inverse of :func:`haar_analysis` on a (4, ..., h, w, C) stack."""
    sd = data_of(stacked)
    if sd.shape[0] != 4:
        raise ShapeError(f"expected a stack of 4 bands, got leading size {sd.shape[0]}")
    return ad._wrap(_synthesis(sd), (stacked,), lambda g: (_analysis(g),), ad.is_tensor(stacked))


def dwt2d(x) -> WaveletBands:
    s = haar_analysis(x)
    return WaveletBands(s[0], s[1], s[2], s[3])


def iwt2d(bands: WaveletBands):
    shapes = {data_of(b).shape for b in bands}
    if len(shapes) != 1:
        raise ShapeError(f"all four bands must share one shape, got {sorted(shapes)}")
    if any(ad.is_tensor(b) for b in bands):
        return haar_synthesis(ad.stack(list(bands)))
    return _synthesis(np.stack([np.asarray(b) for b in bands]))


def swap_bands(source: WaveletBands, donor: WaveletBands, which: str) -> WaveletBands:
    """Replace the LL band (``which='ll'``) or the three detail bands (``'high'``) with the donor's."""
    if source.shape != donor.shape:
        raise ShapeError(f"band shapes differ: {source.shape} vs {donor.shape}")
    if which == "ll":
        return WaveletBands(donor.ll, source.lh, source.hl, source.hh)
    if which == "high":
        return WaveletBands(source.ll, donor.lh, donor.hl, donor.hh)
    raise ValueError(f"which must be 'll' or 'high', got {which!r}")
