import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walmafa.errors import NumericError, ParameterError
from walmafa.gradcheck import grad_check_report
from walmafa.params import ParamStore, Scope
from walmafa.ssm import (SSMParams, init_selective, linear_recurrence, scan, scan_discrete,
                         selective_scan_channel, zoh_discretize)


def naive_scan(a_bar, b_bar, c, d_skip, x):
    """Scalar loops over time, dimension and state; a_bar/b_bar/c are (L, D, N)."""
    L, D = x.shape
    N = a_bar.shape[-1]
    y = np.zeros((L, D))
    for d in range(D):
        h = [0.0] * N
        for t in range(L):
            acc = 0.0
            for n in range(N):
                h[n] = a_bar[t, d, n] * h[n] + b_bar[t, d, n] * x[t, d]
                acc += c[t, d, n] * h[n]
            y[t, d] = acc + d_skip[d] * x[t, d]
    return y


def softplus(v):
    return math.log1p(math.exp(-abs(v))) + max(v, 0.0)


# -- ZOH ------------------------------------------------------------------

def test_zoh_scalar_case():
    a_bar, b_bar = zoh_discretize(-1.0, 1.0, 1.0)
    assert abs(a_bar - math.exp(-1)) < 1e-12
    assert abs(b_bar - (1 - math.exp(-1))) < 1e-12


def test_zoh_zero_timescale_limit():
    a_bar, b_bar = zoh_discretize(-2.0, 3.0, 1e-12)
    assert abs(a_bar - 1) < 1e-11 and abs(b_bar) < 1e-11


def test_zoh_series_branch():
    eps = -1e-4
    exact = zoh_discretize(eps, 1.0, 1.0)[1]
    assert abs(exact - math.expm1(eps) / eps) < 1e-15
    assert abs(exact - (1 + eps / 2)) < 1e-8
    tiny = -1e-7
    assert zoh_discretize(tiny, 1.0, 1.0)[1] == 1 + tiny / 2
    assert zoh_discretize(0.0, 2.0, 1.0)[1] == 2.0


def test_zoh_rejects_nonpositive_delta():
    with pytest.raises(ParameterError):
        zoh_discretize(-1.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        SSMParams(A=[[-1.0]], B=[[1.0]], C=[[1.0]], D_skip=[0.0], delta=[-0.1])
    with pytest.raises(ParameterError):
        SSMParams(A=[[0.5]], B=[[1.0]], C=[[1.0]], D_skip=[0.0], delta=[0.1])


# -- plain scan -------------------------------------------------------------

def test_scan_skip_only(rng):
    x = rng.normal(size=(7, 3))
    params = SSMParams(A=-np.ones((3, 4)), B=rng.normal(size=(3, 4)), C=np.zeros((3, 4)),
                       D_skip=np.ones(3), delta=np.full(3, 0.5))
    np.testing.assert_array_equal(scan(params, x), x)


def test_scan_scalar_unrolled():
    y = scan_discrete(np.full((3, 1, 1), 0.5), np.ones((3, 1, 1)), np.ones((3, 1, 1)),
                      np.zeros(1), np.array([[1.0], [0.0], [0.0]]))
    np.testing.assert_array_equal(y[:, 0], [1.0, 0.5, 0.25])


def _random_params(r, L, D, N):
    return SSMParams(A=-r.uniform(0.05, 3, (D, N)), B=r.normal(size=(L, N)),
                     C=r.normal(size=(L, N)), D_skip=r.normal(size=D),
                     delta=r.uniform(0.01, 1.0, (L, D)))


def test_scan_matches_naive_oracle():
    r = np.random.default_rng(7)
    for _ in range(100):
        L, D, N = r.integers(1, 33), r.integers(1, 9), r.integers(1, 9)
        params = _random_params(r, L, D, N)
        x = r.normal(size=(L, D))
        a_bar, b_bar, c = params.discretize()
        full = (L, D, N)
        expected = naive_scan(np.broadcast_to(a_bar, full), np.broadcast_to(b_bar, full),
                              np.broadcast_to(c, full), params.D_skip, x)
        assert np.abs(scan(params, x) - expected).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_scan_linear_in_input(seed, a, b):
    r = np.random.default_rng(seed)
    params = SSMParams(A=-r.uniform(0.1, 2, (3, 4)), B=r.normal(size=(3, 4)),
                       C=r.normal(size=(3, 4)), D_skip=r.normal(size=3), delta=np.full(3, 0.3))
    x, y = r.normal(size=(2, 10, 3))
    np.testing.assert_allclose(scan(params, a * x + b * y),
                               a * scan(params, x) + b * scan(params, y), atol=1e-10)


def test_scan_is_causal(rng):
    params = _random_params(rng, 12, 3, 4)
    x = rng.normal(size=(12, 3))
    y0 = scan(params, x)
    x2 = x.copy()
    x2[7:] += rng.normal(size=(5, 3))
    np.testing.assert_array_equal(scan(params, x2)[:7], y0[:7])


def test_state_stability_bound(rng):
    a = rng.uniform(0.0, 0.9, (50, 2, 3))
    u_scale = rng.uniform(-1, 1, (50, 2, 3))
    x = rng.uniform(-1, 1, (50, 2, 1))
    h = linear_recurrence(a, u_scale * x)
    bound = np.abs(u_scale).max() * np.abs(x).max() / (1 - a.max())
    assert np.abs(h).max() <= bound


def test_nonfinite_state_names_step():
    a = np.ones(6)
    u = np.array([0, 0, 0, np.inf, 0, 0.0])
    with pytest.raises(NumericError, match="step 3"):
        linear_recurrence(a, u)


# -- selective scan ---------------------------------------------------------

def _selective_store(r, D, N):
    store = ParamStore()
    init_selective(store, "s", D, N, r)
    for name in ("dt_weight", "b_weight", "c_weight"):
        store.set(f"s.{name}", r.normal(size=store[f"s.{name}"].shape))
    store.set("s.a_log", r.normal(size=(D, N)))
    store.set("s.d_skip", r.normal(size=D))
    return store


def test_selective_degenerate_identity(rng):
    D, N = 3, 4
    store = _selective_store(rng, D, N)
    store.set("s.dt_weight", np.zeros((D, D)))
    store.set("s.c_weight", np.zeros((D, N)))
    store.set("s.d_skip", np.ones(D))
    x = rng.normal(size=(9, D))
    np.testing.assert_array_equal(selective_scan_channel(x, Scope(store, "s.")), x)


def test_selective_matches_step_by_step_composition(rng):
    L, D, N = 4, 2, 2
    store = _selective_store(rng, D, N)
    w = Scope(store, "s.")
    x = rng.normal(size=(L, D))
    A = -np.exp(w["a_log"])
    h = np.zeros((D, N))
    expected = np.zeros((L, D))
    for t in range(L):
        pre = x[t] @ w["dt_weight"] + w["dt_bias"]
        delta = np.array([softplus(v) for v in pre])
        B_t, C_t = x[t] @ w["b_weight"], x[t] @ w["c_weight"]
        for d in range(D):
            a_bar, b_bar = zoh_discretize(A[d], B_t, delta[d])
            h[d] = a_bar * h[d] + b_bar * x[t, d]
            expected[t, d] = C_t @ h[d] + w["d_skip"][d] * x[t, d]
    assert np.abs(selective_scan_channel(x, w) - expected).max() < 1e-10


def test_selective_batched(rng):
    store = _selective_store(rng, 3, 2)
    w = Scope(store, "s.")
    x = rng.normal(size=(2, 5, 3))
    batched = selective_scan_channel(x, w)
    for i in range(2):
        np.testing.assert_allclose(batched[i], selective_scan_channel(x[i], w), atol=1e-14)


def test_selective_gradients(rng):
    L, D, N = 8, 4, 4
    store = _selective_store(rng, D, N)
    x = rng.normal(size=(L, D))
    proj = rng.normal(size=(L, D))
    report = grad_check_report(lambda w, inp: selective_scan_channel(inp, Scope(w, "s.")),
                               store, x, lambda y: (y * proj).sum(), samples_per_param=16)
    assert set(report) == {f"s.{n}" for n in
                           ("dt_weight", "dt_bias", "b_weight", "c_weight", "a_log", "d_skip")}
    worst = max(r["max_rel_error"] for r in report.values())
    assert worst < 1e-3, report


def test_selective_input_gradient(rng):
    from walmafa.autodiff import Tensor
    store = _selective_store(rng, 3, 2)
    w = Scope(store, "s.")
    x0 = rng.normal(size=(6, 3))
    proj = rng.normal(size=(6, 3))
    x = Tensor(x0, requires_grad=True)
    (selective_scan_channel(x, w) * proj).sum().backward()
    fd = np.zeros_like(x0)
    for i in np.ndindex(x0.shape):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += 1e-6
        xm[i] -= 1e-6
        fd[i] = ((selective_scan_channel(xp, w) - selective_scan_channel(xm, w)) * proj).sum() / 2e-6
    np.testing.assert_allclose(x.grad, fd, rtol=1e-6, atol=1e-8)
