"""PSNR and single-scale SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ParameterError, ShapeError

PSNR_CAP = 99.0
SSIM_SIGMA = 1.5
SSIM_RADIUS = 5  # 11x11 window
K1, K2 = 0.01, 0.03


@dataclass
class QualityReport:
    psnr: float
    ssim: float
    ssim_map: np.ndarray


def _check_pair(a, b):
    a, b = np.asarray(a, np.float64), np.asarray(b, np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); identical images give the 99 dB cap."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(10.0 * np.log10(peak * peak / mse))


def _blur(x):
    return gaussian_filter(x, sigma=SSIM_SIGMA, radius=SSIM_RADIUS, mode="reflect", axes=(0, 1))


def ssim(a, b, data_range: float = 1.0):
    """Gaussian-window SSIM averaged over channels.

    Returns ``(score, ssim_map)`` where the map is the per-pixel local SSIM
    averaged over channels and the score is the map's mean. Boundaries are
    handled by reflection, so the map covers every pixel.
    """
    a, b = _check_pair(a, b)
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    if min(a.shape[0], a.shape[1]) < 2 * SSIM_RADIUS + 1:
        raise ParameterError(f"image {a.shape[:2]} smaller than the {2 * SSIM_RADIUS + 1}px window")
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a, mu_b = _blur(a), _blur(b)
    var_a = _blur(a * a) - mu_a * mu_a
    var_b = _blur(b * b) - mu_b * mu_b
    cov = _blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = np.clip(num / den, -1.0, 1.0).mean(axis=-1)
    return float(smap.mean()), smap


def quality(a, b) -> QualityReport:
    score, smap = ssim(a, b)
    return QualityReport(psnr(a, b), score, smap)
