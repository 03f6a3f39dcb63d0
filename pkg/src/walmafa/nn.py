"""Convolution, normalization and resampling on (..., H, W, C) feature maps.

Feature maps are channel-last arrays. Any number of leading batch axes is
allowed; every op here acts on the trailing three. All functions accept
plain numpy arrays or :class:`~walmafa.autodiff.Tensor` objects and record
gradients only for the latter.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import autodiff as ad
from .autodiff import data_of
from .errors import ShapeError
from .params import ParamStore


def check_feature_map(x, name: str = "input") -> None:
    if data_of(x).ndim < 3:
        raise ShapeError(f"{name}: expected (..., H, W, C), got shape {data_of(x).shape}")


def conv2d(x, kernel, bias, stride: int = 1):
    """Zero-padded 'same' convolution.

    ``kernel`` has shape (k, k, Cin, Cout) with odd k. With ``stride`` s the
    output is the stride-1 result sampled every s pixels, so H and W must be
    multiples of s.
    """
    xd, kd, bd = data_of(x), data_of(kernel), data_of(bias)
    check_feature_map(xd)
    if kd.ndim != 4 or kd.shape[0] != kd.shape[1] or kd.shape[0] % 2 == 0:
        raise ShapeError(f"kernel must be (k, k, Cin, Cout) with odd k, got {kd.shape}")
    k, _, cin, cout = kd.shape
    if xd.shape[-1] != cin:
        raise ShapeError(f"input has {xd.shape[-1]} channels, kernel expects {cin}")
    if bd.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},), got {bd.shape}")
    h, w = xd.shape[-3], xd.shape[-2]
    if stride < 1 or h % stride or w % stride:
        raise ShapeError(f"stride {stride} does not divide spatial size {(h, w)}")

    lead = xd.shape[:-3]
    if k == 1 and stride == 1:
        w2 = kd[0, 0]
        out = xd @ w2 + bd

        def backward(g):
            gx = g @ w2.T
            gw = xd.reshape(-1, cin).T @ g.reshape(-1, cout)
            return gx, gw.reshape(kd.shape), g.reshape(-1, cout).sum(axis=0)

        return ad._wrap(out, (x, kernel, bias), backward, ad._any_tensor(x, kernel, bias))

    p = k // 2
    pad = [(0, 0)] * len(lead) + [(p, p), (p, p), (0, 0)]
    xp = np.pad(xd, pad)
    win = sliding_window_view(xp, (k, k), axis=(-3, -2))[..., ::stride, ::stride, :, :, :]
    ho, wo = win.shape[-5], win.shape[-4]
    cols = win.reshape(-1, cin * k * k)
    k2 = kd.transpose(2, 0, 1, 3).reshape(cin * k * k, cout)
    out = (cols @ k2 + bd).reshape(*lead, ho, wo, cout)

    def backward(g):
        g2 = g.reshape(-1, cout)
        gk = (cols.T @ g2).reshape(cin, k, k, cout).transpose(1, 2, 0, 3)
        gb = g2.sum(axis=0)
        gcols = (g2 @ k2.T).reshape(*lead, ho, wo, cin, k, k)
        gxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                gxp[..., i:i + stride * ho:stride, j:j + stride * wo:stride, :] += gcols[..., i, j]
        return gxp[..., p:p + h, p:p + w, :], gk, gb

    return ad._wrap(out, (x, kernel, bias), backward, ad._any_tensor(x, kernel, bias))


def layer_norm(x, gain, shift, epsilon: float = 1e-5):
    """Normalize each pixel over its channel axis, then apply a per-channel affine map."""
    c = data_of(x).shape[-1]
    if data_of(gain).shape != (c,) or data_of(shift).shape != (c,):
        raise ShapeError(f"gain/shift must have shape ({c},)")
    if not ad._any_tensor(x, gain, shift):
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        return xc / np.sqrt(var + epsilon) * gain + shift
    x = x if ad.is_tensor(x) else ad.Tensor(x)
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    return xc * ad.power(var + epsilon, -0.5) * gain + shift


def pixel_unshuffle(x, factor: int = 2):
    """Space-to-depth: (..., H, W, C) → (..., H/f, W/f, f²C)."""
    shape = data_of(x).shape
    *lead, h, w, c = shape
    if h % factor or w % factor:
        raise ShapeError(f"spatial size {(h, w)} not divisible by {factor}")
    n = len(lead)
    y = ad.reshape(x, (*lead, h // factor, factor, w // factor, factor, c))
    y = ad.transpose(y, tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4))
    return ad.reshape(y, (*lead, h // factor, w // factor, factor * factor * c))


def pixel_shuffle(x, factor: int = 2):
    """Depth-to-space: (..., H, W, f²C) → (..., fH, fW, C)."""
    *lead, h, w, c4 = data_of(x).shape
    if c4 % (factor * factor):
        raise ShapeError(f"channel count {c4} not divisible by {factor * factor}")
    c = c4 // (factor * factor)
    n = len(lead)
    y = ad.reshape(x, (*lead, h, w, factor, factor, c))
    y = ad.transpose(y, tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4))
    return ad.reshape(y, (*lead, h * factor, w * factor, c))


def resample(x, direction: str, kernel, bias):
    """Learnable 2x resampling with the channel law down: C→2C, up: C→C/2.

    ``down`` unshuffles 2×2 blocks into channels (4C) and a 1×1 conv maps
    them to 2C. ``up`` maps C→2C with a 1×1 conv and shuffles 4 channels
    into each 2×2 block.
    """
    *_, h, w, c = data_of(x).shape
    if direction == "down":
        if h % 2 or w % 2:
            raise ShapeError(f"down-sampling needs even spatial size, got {(h, w)}")
        return conv2d(pixel_unshuffle(x), kernel, bias)
    if direction == "up":
        if c % 2:
            raise ShapeError(f"up-sampling needs an even channel count, got {c}")
        return pixel_shuffle(conv2d(x, kernel, bias))
    raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")


# -- parameter initialisation --------------------------------------------

def init_conv(store: ParamStore, name: str, k: int, cin: int, cout: int,
              rng: np.random.Generator, zero: bool = False, dtype=np.float64) -> None:
    fan_in = k * k * cin
    if zero:
        weight = np.zeros((k, k, cin, cout), dtype=dtype)
    else:
        weight = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(k, k, cin, cout)).astype(dtype)
    store.add(f"{name}.weight", weight)
    store.add(f"{name}.bias", np.zeros(cout, dtype=dtype))


def init_norm(store: ParamStore, name: str, c: int, dtype=np.float64) -> None:
    store.add(f"{name}.gain", np.ones(c, dtype=dtype))
    store.add(f"{name}.shift", np.zeros(c, dtype=dtype))


def init_resample(store: ParamStore, name: str, c: int, direction: str,
                  rng: np.random.Generator, dtype=np.float64) -> None:
    cin = 4 * c if direction == "down" else c
    init_conv(store, name, 1, cin, 2 * c, rng, dtype=dtype)


def conv(x, w, name: str, stride: int = 1):
    """Apply the conv stored under ``name`` in the weight mapping ``w``."""
    return conv2d(x, w[f"{name}.weight"], w[f"{name}.bias"], stride)


def norm(x, w, name: str, epsilon: float = 1e-5):
    return layer_norm(x, w[f"{name}.gain"], w[f"{name}.shift"], epsilon)
