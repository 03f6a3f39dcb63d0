import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walmafa.errors import ParameterError, ShapeError
from walmafa.metrics import PSNR_CAP, psnr, quality, ssim


def ssim_bruteforce(a, b, sigma=1.5, radius=5, c1=1e-4, c2=9e-4):
    """Explicit Gaussian-weighted window sums with half-sample symmetric borders."""
    offs = np.arange(-radius, radius + 1)
    g = np.exp(-0.5 * (offs / sigma) ** 2)
    win = np.outer(g, g) / g.sum() ** 2
    h, w, c = a.shape
    pa = np.pad(a, ((radius, radius), (radius, radius), (0, 0)), mode="symmetric")
    pb = np.pad(b, ((radius, radius), (radius, radius), (0, 0)), mode="symmetric")
    smap = np.zeros((h, w, c))
    for i in range(h):
        for j in range(w):
            for k in range(c):
                wa = pa[i:i + 2 * radius + 1, j:j + 2 * radius + 1, k]
                wb = pb[i:i + 2 * radius + 1, j:j + 2 * radius + 1, k]
                ma, mb = (win * wa).sum(), (win * wb).sum()
                va = (win * (wa - ma) ** 2).sum()
                vb = (win * (wb - mb) ** 2).sum()
                cov = (win * (wa - ma) * (wb - mb)).sum()
                smap[i, j, k] = ((2 * ma * mb + c1) * (2 * cov + c2)
                                 / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return smap.mean(axis=-1)


# -- PSNR -----------------------------------------------------------------

def test_psnr_closed_forms(rng):
    a = rng.uniform(0.2, 0.8, (8, 8, 3))
    assert psnr(a, a) == PSNR_CAP
    assert abs(psnr(a, a + 0.1) - 20.0) < 1e-9
    assert abs(psnr(np.zeros((4, 4, 3)), np.ones((4, 4, 3)))) < 1e-12
    assert abs(psnr(a, a + 25.5, peak=255.0) - 20.0) < 1e-9


def test_psnr_monotone_in_noise(rng):
    a = rng.uniform(size=(16, 16, 3))
    noise = rng.normal(size=a.shape)
    values = [psnr(a, a + amp * noise) for amp in (0.01, 0.02, 0.05, 0.1, 0.2)]
    assert all(x > y for x, y in zip(values, values[1:]))


def test_psnr_shape_mismatch():
    with pytest.raises(ShapeError):
        psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


# -- SSIM -----------------------------------------------------------------

def test_ssim_self_similarity(rng):
    a = rng.uniform(size=(16, 16, 3))
    score, smap = ssim(a, a)
    assert score == 1.0 and np.all(smap == 1.0)


def test_ssim_matches_bruteforce(rng):
    a = rng.uniform(size=(13, 12, 2))
    b = np.clip(a + 0.2 * rng.normal(size=a.shape), 0, 1)
    score, smap = ssim(a, b)
    expected = ssim_bruteforce(a, b)
    assert np.abs(smap - expected).max() < 1e-10
    assert abs(score - expected.mean()) < 1e-10


def test_ssim_inverted_checkerboard():
    a = (np.indices((11, 11)).sum(axis=0) % 2).astype(float)[..., None]
    score, smap = ssim(a, 1 - a)
    expected = ssim_bruteforce(a, 1 - a)
    assert np.abs(smap - expected).max() < 1e-10
    assert score < -0.95 and smap[5, 5] < -0.95


def test_ssim_symmetry_and_mean(rng):
    a, b = rng.uniform(size=(2, 16, 16, 3))
    s_ab, m_ab = ssim(a, b)
    s_ba, _ = ssim(b, a)
    assert abs(s_ab - s_ba) < 1e-12
    assert abs(s_ab - m_ab.mean()) < 1e-9
    report = quality(a, b)
    assert report.ssim == s_ab and report.ssim_map.shape == (16, 16)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), perm=st.permutations([0, 1, 2]))
def test_ssim_channel_permutation_and_bound(seed, perm):
    r = np.random.default_rng(seed)
    a = r.uniform(size=(12, 12, 3))
    b = r.uniform(size=(12, 12, 3))
    score, smap = ssim(a, b)
    assert abs(ssim(a[..., perm], b[..., perm])[0] - score) < 1e-12
    assert np.all(np.abs(smap) <= 1.0)


def test_ssim_too_small():
    with pytest.raises(ParameterError):
        ssim(np.zeros((10, 20, 3)), np.zeros((10, 20, 3)))
