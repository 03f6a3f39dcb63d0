"""Unitary 2D DFT in polar (amplitude, phase) form, applied per channel."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import data_of
from .errors import NumericWarning, ShapeError

RESIDUAL_IMAG_TOL = 1e-6
_AXES = (-3, -2)


class PolarSpectrum(NamedTuple):
    amplitude: object
    phase: object

    @property
    def shape(self):
        return data_of(self.amplitude).shape


def _self_conjugate_mask(h: int, w: int) -> np.ndarray:
    """Bins (u, v) that equal (-u mod H, -v mod W); their DFT is real for real input."""
    rows = np.zeros(h, bool)
    cols = np.zeros(w, bool)
    rows[0] = cols[0] = True
    if h % 2 == 0:
        rows[h // 2] = True
    if w % 2 == 0:
        cols[w // 2] = True
    return rows[:, None] & cols[None, :]


def _forward(x: np.ndarray):
    spec = np.fft.fft2(x, axes=_AXES, norm="ortho")
    h, w = x.shape[-3], x.shape[-2]
    mask = _self_conjugate_mask(h, w)[:, :, None]
    # exact zeros keep atan2 on one side of the branch cut; +0.0 clears signed zeros
    re = spec.real
    im = np.where(mask, 0.0, spec.imag) + 0.0
    amp = np.hypot(re, im)
    phase = np.arctan2(im, re)
    phase = np.where(phase == -np.pi, np.pi, phase)
    return re, im, amp, phase


def fft2d_polar_stacked(x):
    """Differentiable forward transform returning a (2, ..., H, W, C) stack [amplitude, phase]."""
    xd = data_of(x)
    if xd.ndim < 3:
        raise ShapeError(f"expected (..., H, W, C), got {xd.shape}")
    re, im, amp, phase = _forward(xd)
    out = np.stack([amp, phase]).astype(xd.dtype, copy=False)

    def backward(g):
        ga, gp = g[0], g[1]
        r2 = amp * amp
        nz = r2 > 0
        inv_r = np.divide(1.0, amp, out=np.zeros_like(amp), where=nz)
        inv_r2 = np.divide(1.0, r2, out=np.zeros_like(r2), where=nz)
        d_re = ga * re * inv_r - gp * im * inv_r2
        d_im = ga * im * inv_r + gp * re * inv_r2
        gx = np.fft.ifft2(d_re + 1j * d_im, axes=_AXES, norm="ortho").real
        return (gx.astype(xd.dtype, copy=False),)

    return ad._wrap(out, (x,), backward, ad.is_tensor(x))


def fft2d_polar(x) -> PolarSpectrum:
    """Amplitude and phase of X(u, v) = (HW)^-1/2 Σ x(h, w) e^{-j2π(hu/H + wv/W)} per channel.

    Phase lies in (-π, π]; the phase of a zero bin is 0.
    """
    s = fft2d_polar_stacked(x)
    return PolarSpectrum(s[0], s[1])


def ifft2d_polar(spec: PolarSpectrum, return_residual: bool = False, warn: bool = True):
    """Recombine amplitude/phase, apply the unitary inverse DFT and keep the real part.

    The largest discarded imaginary magnitude is the residual. It is non-zero
    whenever the spectrum is not Hermitian (e.g. after swapping components);
    above ``RESIDUAL_IMAG_TOL`` a :class:`NumericWarning` is issued unless
    ``warn`` is False.
    """
    amp, phase = spec
    a, p = data_of(amp), data_of(phase)
    if a.shape != p.shape:
        raise ShapeError(f"amplitude {a.shape} and phase {p.shape} differ in shape")
    cos_p, sin_p = np.cos(p), np.sin(p)
    z = np.fft.ifft2(a * cos_p + 1j * (a * sin_p), axes=_AXES, norm="ortho")
    residual = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if warn and residual > RESIDUAL_IMAG_TOL:
        warnings.warn(f"discarded imaginary part up to {residual:.3g} "
                      "(spectrum is not Hermitian)", NumericWarning, stacklevel=2)

    def backward(g):
        gz = np.fft.fft2(g, axes=_AXES, norm="ortho")
        d_re, d_im = gz.real, gz.imag
        ga = d_re * cos_p + d_im * sin_p
        gp = a * (d_im * cos_p - d_re * sin_p)
        return ga.astype(a.dtype, copy=False), gp.astype(p.dtype, copy=False)

    out = ad._wrap(z.real.astype(a.dtype, copy=False), (amp, phase), backward,
                   ad._any_tensor(amp, phase))
    return (out, residual) if return_residual else out


def swap_polar(source: PolarSpectrum, donor: PolarSpectrum, which: str) -> PolarSpectrum:
    """Take ``which`` ('amplitude' or 'phase') from the donor and the other component from the source."""
    if source.shape != donor.shape:
        raise ShapeError(f"spectrum shapes differ: {source.shape} vs {donor.shape}")
    if which == "amplitude":
        return PolarSpectrum(donor.amplitude, source.phase)
    if which == "phase":
        return PolarSpectrum(source.amplitude, donor.phase)
    raise ValueError(f"which must be 'amplitude' or 'phase', got {which!r}")
