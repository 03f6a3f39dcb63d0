"""Wavelet-based Mamba Block (WMB) and Fast Fourier Adjustment Block (FFAB).

Both blocks map (..., H, W, C) to the same shape. Weights are read from a
mapping (usually a :class:`~walmafa.params.Scope`) with the names
registered by :func:`init_wmb` / :func:`init_ffab`.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import data_of
from .errors import ShapeError
from .fourier import PolarSpectrum, fft2d_polar, ifft2d_polar
from .nn import conv, conv2d, init_conv, init_norm, norm
from .params import ParamStore, Scope
from .ssm import init_selective, selective_scan_channel
from .wavelet import WaveletBands, dwt2d, iwt2d

MAMBA_EXPAND = 2
FFN_EXPAND = 2


def _scope(w, name):
    return w.sub(name) if isinstance(w, Scope) else Scope(w, f"{name}.")


# -- Channel-wise Mamba ---------------------------------------------------

def init_channel_mamba(store: ParamStore, name: str, c: int, state_size: int,
                       rng: np.random.Generator, dtype=np.float64) -> None:
    e = MAMBA_EXPAND * c
    store.add(f"{name}.in_weight", rng.normal(0, 1 / np.sqrt(c), (c, 2 * e)).astype(dtype))
    store.add(f"{name}.out_weight", rng.normal(0, 1 / np.sqrt(e), (e, c)).astype(dtype))
    init_selective(store, f"{name}.ssm", e, state_size, rng, dtype)


def channel_mamba(seq, w):
    """Gated selective scan over a (..., L, C) token sequence, with a residual path.

    The input is projected to two width-2C streams; one is scanned, the
    other gates the scan output through SiLU. A final projection returns to
    C channels and is added to the input, so a zero ``out_weight`` makes
    the whole unit the identity.
    """
    e = data_of(w["out_weight"]).shape[0]
    xz = ad.matmul(seq, w["in_weight"])
    xs = ad.silu(xz[..., :e])
    gate = ad.silu(xz[..., e:])
    ys = selective_scan_channel(xs, _scope(w, "ssm")) * gate
    return seq + ad.matmul(ys, w["out_weight"])


# -- WMB ------------------------------------------------------------------

def init_wmb(store: ParamStore, name: str, c: int, state_size: int,
             rng: np.random.Generator, dtype=np.float64) -> None:
    init_norm(store, f"{name}.norm1", c, dtype)
    init_norm(store, f"{name}.norm2", c, dtype)
    init_conv(store, f"{name}.low_in", 3, c, c, rng, dtype=dtype)
    init_channel_mamba(store, f"{name}.mamba", c, state_size, rng, dtype)
    init_conv(store, f"{name}.low_out", 3, c, c, rng, dtype=dtype)
    # one 3x3 conv grouped per detail band: (band, k, k, C, C)
    std = 1 / np.sqrt(9 * c)
    store.add(f"{name}.high.weight", rng.normal(0, std, (3, 3, 3, c, c)).astype(dtype))
    store.add(f"{name}.high.bias", np.zeros((3, c), dtype=dtype))
    init_conv(store, f"{name}.ffn.fc1", 1, c, FFN_EXPAND * c, rng, dtype=dtype)
    init_conv(store, f"{name}.ffn.fc2", 1, FFN_EXPAND * c, c, rng, dtype=dtype)


def wavelet_mamba(x, w, return_ll: bool = False):
    """DWT, enhance LL with conv + Channel-wise Mamba + conv, conv the detail bands, IWT.

    The LL band's spatial positions are flattened into a sequence of
    length (H/2)(W/2) whose feature dimension is the channel axis.
    With ``return_ll`` the processed LL band is returned alongside.
    """
    xd = data_of(x)
    h, wd = xd.shape[-3], xd.shape[-2]
    if h % 2 or wd % 2:
        raise ShapeError(f"WMB needs even height and width, got {(h, wd)}")
    bands = dwt2d(x)
    f = ad.gelu(conv(bands.ll, w, "low_in"))
    *lead, hh, ww, c = data_of(f).shape
    seq = ad.reshape(f, (*lead, hh * ww, c))
    seq = channel_mamba(seq, _scope(w, "mamba"))
    ll = conv(ad.reshape(seq, (*lead, hh, ww, c)), w, "low_out")
    kw, kb = w["high.weight"], w["high.bias"]
    highs = [conv2d(band, kw[i], kb[i]) for i, band in enumerate(bands[1:])]
    out = iwt2d(WaveletBands(ll, *highs))
    return (out, ll) if return_ll else out


def ffn(x, w):
    return conv(ad.gelu(conv(x, w, "fc1")), w, "fc2")


def wmb_forward(x, w):
    """Token-mixer residual pair around the wavelet-Mamba mixer.

    Returns ``(out, ll_pred)`` where ``ll_pred`` is the mixer's processed LL band.
    """
    mixed, ll = wavelet_mamba(norm(x, w, "norm1"), w, return_ll=True)
    mid = mixed + x
    out = ffn(norm(mid, w, "norm2"), _scope(w, "ffn")) + mid
    return out, ll


# -- FFAB -----------------------------------------------------------------

def init_ffab(store: ParamStore, name: str, c: int, rng: np.random.Generator,
              dtype=np.float64) -> None:
    for branch in ("amp", "pha"):
        init_conv(store, f"{name}.{branch}1", 1, c, c, rng, dtype=dtype)
        init_conv(store, f"{name}.{branch}2", 1, c, c, rng, dtype=dtype)
    init_conv(store, f"{name}.out", 3, c, c, rng, dtype=dtype)


def ffab_forward(x, w):
    """Refine amplitude and phase with two 1x1 conv + GELU units each, resynthesise,
    then a 3x3 conv and a skip connection from the input."""
    spec = fft2d_polar(x)
    amp = ad.gelu(conv(ad.gelu(conv(spec.amplitude, w, "amp1")), w, "amp2"))
    pha = ad.gelu(conv(ad.gelu(conv(spec.phase, w, "pha1")), w, "pha2"))
    # the refined spectrum is generally not Hermitian; its imaginary part is dropped by design
    spatial = ifft2d_polar(PolarSpectrum(amp, pha), warn=False)
    return conv(spatial, w, "out") + x
