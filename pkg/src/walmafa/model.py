"""The Encoder-Latent-Decoder enhancement network and its losses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import data_of
from .blocks import ffab_forward, init_ffab, init_wmb, wmb_forward
from .errors import NumericError, ShapeError
from .fourier import fft2d_polar_stacked
from .nn import conv, init_conv, init_resample, resample
from .params import ParamStore, Scope
from .wavelet import dwt2d

LATENT_FFABS = 6
LEVELS = 3


@dataclass
class ModelConfig:
    base_width: int = 16
    encoder_depths: list[int] = field(default_factory=lambda: [2, 3, 4])
    ssm_state: int = 16
    lam: float = 0.1
    epsilon_charbonnier: float = 1e-3

    def __post_init__(self):
        self.encoder_depths = [int(d) for d in self.encoder_depths]
        if len(self.encoder_depths) != LEVELS or min(self.encoder_depths) < 1:
            raise ValueError(f"encoder_depths must be {LEVELS} positive ints, "
                             f"got {self.encoder_depths}")
        if self.base_width < 1 or self.ssm_state < 1:
            raise ValueError("base_width and ssm_state must be positive")

    @property
    def decoder_depths(self) -> list[int]:
        return list(self.encoder_depths)

    @property
    def size_multiple(self) -> int:
        return 2 ** LEVELS


class Losses(NamedTuple):
    total: object
    charbonnier: object
    wavelet: object
    fourier: object

    def as_floats(self) -> dict:
        return {k: float(data_of(v)) for k, v in self._asdict().items()}


def init_params(config: ModelConfig, rng: np.random.Generator | int = 0,
                dtype=np.float64, zero_head: bool = True) -> ParamStore:
    """Build a freshly initialised parameter store.

    With ``zero_head`` the RGB head starts at zero, so the untrained network
    returns its input unchanged through the global residual.
    """
    rng = np.random.default_rng(rng)
    c, n = config.base_width, config.ssm_state
    store = ParamStore()
    init_conv(store, "stem.conv1", 1, 3, c, rng, dtype=dtype)
    init_conv(store, "stem.conv3", 3, 3, c, rng, dtype=dtype)
    for level, depth in enumerate(config.encoder_depths):
        width = c * 2 ** level
        for j in range(depth):
            init_wmb(store, f"encoder.{level}.{j}", width, n, rng, dtype)
        if level < LEVELS - 1:
            init_resample(store, f"encoder.down{level}", width, "down", rng, dtype)
    deep = c * 2 ** (LEVELS - 1)
    for i in range(LATENT_FFABS):
        init_ffab(store, f"latent.{i}", deep, rng, dtype)
    init_conv(store, "latent.fuse4", 1, 2 * deep, deep, rng, dtype=dtype)
    init_conv(store, "latent.fuse5", 1, 2 * deep, deep, rng, dtype=dtype)
    for level in reversed(range(LEVELS)):
        width = c * 2 ** level
        if level < LEVELS - 1:
            init_resample(store, f"decoder.up{level}", 2 * width, "up", rng, dtype)
        for j in range(config.decoder_depths[level]):
            init_wmb(store, f"decoder.{level}.{j}", width, n, rng, dtype)
    store.add("omega1", np.array(1.0, dtype=dtype))
    store.add("omega2", np.array(1.0, dtype=dtype))
    init_conv(store, "head", 3, c, 3, rng, zero=zero_head, dtype=dtype)
    init_conv(store, "aux.ll_proj", 1, c, 3, rng, dtype=dtype)
    init_conv(store, "aux.latent_proj", 1, deep, 3, rng, dtype=dtype)
    return store


def stem(image, w):
    """Sum of a 1x1 and a 3x3 convolution path, 3 → C channels."""
    if data_of(image).shape[-1] != 3:
        raise ShapeError(f"stem expects 3 input channels, got {data_of(image).shape[-1]}")
    return conv(image, w, "stem.conv1") + conv(image, w, "stem.conv3")


def _check_stage(x, stage: str, trace: dict | None):
    arr = data_of(x)
    if trace is not None:
        trace[stage] = float(np.sqrt(np.mean(arr * arr)))
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values after stage '{stage}'")


def latent(x, w):
    """Six FFABs with the two concatenation skips; a 1x1 conv restores the width after each concat."""
    y0 = ffab_forward(x, w.sub("latent.0"))
    y1 = ffab_forward(y0, w.sub("latent.1"))
    y2 = ffab_forward(y1, w.sub("latent.2"))
    y3 = ffab_forward(y2, w.sub("latent.3"))
    y4 = ffab_forward(conv(ad.concat([y1, y3], axis=-1), w, "latent.fuse4"), w.sub("latent.4"))
    return ffab_forward(conv(ad.concat([y0, y4], axis=-1), w, "latent.fuse5"), w.sub("latent.5"))


def forward(image, params, config: ModelConfig, trace: dict | None = None):
    """Enhance ``image`` (..., H, W, 3) with H and W divisible by 8.

    ``params`` is a ParamStore or any name → array/Tensor mapping. Returns
    ``(enhanced, ll_pred, latent_out)``: the RGB output, the 3-channel
    projection of the last decoder WMB's LL band (H/2, W/2) and the
    3-channel projection of the latent output (H/4, W/4).
    """
    w = params if isinstance(params, Scope) else Scope(params)
    h, wd = data_of(image).shape[-3:-1]
    m = config.size_multiple
    if h % m or wd % m:
        raise ShapeError(f"image size {(h, wd)} must be divisible by {m}; "
                         f"pad by {(-h % m, -wd % m)} pixels (rows, cols)")

    x = stem(image, w)
    _check_stage(x, "stem", trace)
    skips = []
    for level, depth in enumerate(config.encoder_depths):
        for j in range(depth):
            x, _ = wmb_forward(x, w.sub(f"encoder.{level}.{j}"))
        skips.append(x)
        _check_stage(x, f"encoder.{level}", trace)
        if level < LEVELS - 1:
            x = resample(x, "down", w[f"encoder.down{level}.weight"], w[f"encoder.down{level}.bias"])

    y5 = latent(x, w)
    _check_stage(y5, "latent", trace)

    x = y5
    ll = None
    omegas = {1: w["omega1"], 0: w["omega2"]}
    for level in reversed(range(LEVELS)):
        if level < LEVELS - 1:
            up = resample(x, "up", w[f"decoder.up{level}.weight"], w[f"decoder.up{level}.bias"])
            x = up + omegas[level] * skips[level]
        for j in range(config.decoder_depths[level]):
            x, ll = wmb_forward(x, w.sub(f"decoder.{level}.{j}"))
        _check_stage(x, f"decoder.{level}", trace)

    enhanced = conv(x, w, "head") + image
    _check_stage(enhanced, "head", trace)
    return enhanced, conv(ll, w, "aux.ll_proj"), conv(y5, w, "aux.latent_proj")


def area_downsample(x: np.ndarray, factor: int) -> np.ndarray:
    *lead, h, w, c = x.shape
    if h % factor or w % factor:
        raise ShapeError(f"size {(h, w)} not divisible by {factor}")
    return x.reshape(*lead, h // factor, factor, w // factor, factor, c).mean(axis=(-4, -2))


def compute_losses(enhanced, ll_pred, latent_out, ground_truth, config: ModelConfig) -> Losses:
    """Charbonnier, wavelet-LL, Fourier-phase and weighted total losses.

    Every norm is mean-reduced over elements:
    charbonnier = sqrt(mean((I_e - G)^2) + eps^2),
    wavelet = mean((ll_pred - LL(G))^2),
    fourier = mean((phase(latent_out) - phase(G downsampled))^2),
    total = charbonnier + lam * (wavelet + fourier).
    """
    g = np.asarray(data_of(ground_truth))
    if data_of(enhanced).shape != g.shape:
        raise ShapeError(f"output {data_of(enhanced).shape} vs ground truth {g.shape}")
    g_ll = dwt2d(g).ll
    if data_of(ll_pred).shape != g_ll.shape:
        raise ShapeError(f"ll_pred {data_of(ll_pred).shape} vs ground-truth LL {g_ll.shape}")
    factor = g.shape[-3] // data_of(latent_out).shape[-3]
    g_small = area_downsample(g, factor)
    if data_of(latent_out).shape != g_small.shape:
        raise ShapeError(f"latent_out {data_of(latent_out).shape} vs resized truth {g_small.shape}")

    diff = enhanced - g
    eps = config.epsilon_charbonnier
    l_c = ad.sqrt(ad.mean(diff * diff) + eps * eps)
    dll = ll_pred - g_ll
    l_w = ad.mean(dll * dll)
    g_phase = fft2d_polar_stacked(g_small)[1]
    dph = fft2d_polar_stacked(latent_out)[1] - g_phase
    l_f = ad.mean(dph * dph)
    total = l_c + config.lam * (l_w + l_f)
    return Losses(total, l_c, l_w, l_f)
