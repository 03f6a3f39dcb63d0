import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walmafa.config import TrainConfig
from walmafa.errors import NumericError, ShapeError
from walmafa.gradcheck import grad_check_report
from walmafa.model import (ModelConfig, area_downsample, compute_losses, forward, init_params,
                           stem)
from walmafa.params import Scope, load_checkpoint, save_checkpoint
from walmafa.train import AdamState, fit, train_step
from walmafa.wavelet import dwt2d

SMALL = ModelConfig(base_width=4, encoder_depths=[1, 1, 1], ssm_state=2)


def charbonnier(a, b, eps=1e-3):
    return math.sqrt(float(np.mean((a - b) ** 2)) + eps * eps)


def perfect_outputs(g):
    return g.copy(), dwt2d(g).ll, area_downsample(g, 4)


# -- stem -----------------------------------------------------------------

def test_stem_examples(rng):
    params = init_params(ModelConfig(), rng)
    image = rng.uniform(size=(8, 8, 3))
    assert stem(image, Scope(params)).shape == (8, 8, 16)
    for name in params.names("stem."):
        params.set(name, np.zeros_like(params[name]))
    np.testing.assert_array_equal(stem(image, Scope(params)), np.zeros((8, 8, 16)))
    embed = np.zeros((1, 1, 3, 16))
    embed[0, 0, :, :3] = np.eye(3)
    params.set("stem.conv1.weight", embed)
    out = stem(image, Scope(params))
    np.testing.assert_array_equal(out[..., :3], image)
    assert not out[..., 3:].any()
    with pytest.raises(ShapeError):
        stem(rng.uniform(size=(8, 8, 4)), Scope(params))


# -- forward --------------------------------------------------------------

def test_forward_shapes_default_config(rng):
    params = init_params(ModelConfig(), 0)
    image = rng.uniform(size=(16, 16, 3))
    enhanced, ll_pred, latent_out = forward(image, params, ModelConfig())
    assert enhanced.shape == image.shape
    assert ll_pred.shape == (8, 8, 3) and latent_out.shape == (4, 4, 3)


def test_zero_head_is_identity(rng):
    params = init_params(SMALL, 3)
    image = rng.uniform(size=(2, 16, 24, 3))
    np.testing.assert_array_equal(forward(image, params, SMALL)[0], image)


def test_all_zero_params_is_identity(rng):
    params = init_params(SMALL, 3, zero_head=False)
    for name in params:
        params.set(name, np.zeros_like(params[name]))
    image = rng.uniform(size=(16, 16, 3))
    np.testing.assert_array_equal(forward(image, params, SMALL)[0], image)


def test_forward_size_errors(rng):
    params = init_params(SMALL, 0)
    with pytest.raises(ShapeError, match=r"pad by \(4, 2\)"):
        forward(rng.uniform(size=(12, 14, 3)), params, SMALL)


def test_forward_names_failing_stage(rng):
    params = init_params(SMALL, 0)
    params.set("stem.conv3.bias", np.full(4, np.nan))
    with pytest.raises(NumericError, match="stem"):
        forward(rng.uniform(size=(16, 16, 3)), params, SMALL)


def test_forward_deterministic(rng):
    params = init_params(SMALL, 1, zero_head=False)
    image = rng.uniform(size=(16, 16, 3))
    a, b = forward(image, params, SMALL), forward(image.copy(), params, SMALL)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_checkpoint_forward_bit_identical(rng, tmp_path):
    params = init_params(SMALL, 5, zero_head=False)
    save_checkpoint(params, tmp_path / "m.ckpt")
    image = rng.uniform(size=(16, 16, 3))
    a = forward(image, params, SMALL)
    b = forward(image, load_checkpoint(tmp_path / "m.ckpt"), SMALL)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_parameter_count():
    count = init_params(ModelConfig(), 0).count()
    print(f"parameter count at C=16, depths [2, 3, 4], N=16: {count:,}")
    assert 1e6 < count < 1e8


# -- losses ---------------------------------------------------------------

def test_loss_floor(rng):
    g = rng.uniform(size=(16, 16, 3))
    losses = compute_losses(*perfect_outputs(g), g, ModelConfig()).as_floats()
    assert losses["charbonnier"] == 1e-3
    assert losses["wavelet"] == 0.0 and losses["fourier"] == 0.0
    assert losses["total"] == 1e-3


def test_loss_constant_offset():
    g = np.full((4, 4, 3), 0.3)
    out = compute_losses(g + 0.1, dwt2d(g).ll, area_downsample(g, 4), g, ModelConfig())
    assert abs(float(out.charbonnier) - math.sqrt(0.01 + 1e-6)) < 1e-12
    assert round(float(out.charbonnier), 5) == 0.1


def test_lambda_zero_collapses(rng):
    g = rng.uniform(size=(8, 8, 3))
    cfg = ModelConfig(lam=0.0)
    out = compute_losses(g + 0.05, rng.uniform(size=(4, 4, 3)), rng.uniform(size=(2, 2, 3)), g, cfg)
    assert float(out.total) == float(out.charbonnier)


def test_loss_shape_errors(rng):
    g = rng.uniform(size=(8, 8, 3))
    with pytest.raises(ShapeError):
        compute_losses(g[:4], dwt2d(g).ll, area_downsample(g, 4), g, ModelConfig())
    with pytest.raises(ShapeError):
        compute_losses(g, g, area_downsample(g, 4), g, ModelConfig())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(0, 2))
def test_loss_bounds(seed, lam):
    r = np.random.default_rng(seed)
    g = r.uniform(size=(8, 8, 3))
    out = compute_losses(r.uniform(size=(8, 8, 3)), r.normal(size=(4, 4, 3)),
                         r.normal(size=(2, 2, 3)), g, ModelConfig(lam=lam)).as_floats()
    assert out["charbonnier"] >= 1e-3
    assert out["wavelet"] >= 0 and out["fourier"] >= 0
    assert out["total"] >= out["charbonnier"]


def test_initial_charbonnier_is_input_distance(rng):
    low, high = rng.uniform(size=(2, 16, 16, 3))
    params = init_params(SMALL, 0)
    out = compute_losses(*forward(low, params, SMALL), high, SMALL)
    assert abs(float(out.charbonnier) - charbonnier(low, high)) < 1e-15


# -- gradients ------------------------------------------------------------

def test_omega_gradients(rng):
    params = init_params(SMALL, 2, zero_head=False)
    for name in params:
        if not name.startswith("omega"):
            params.freeze(name)
    low, high = rng.uniform(size=(2, 16, 16, 3))

    def loss(outputs):
        return compute_losses(*outputs, high, SMALL).total

    report = grad_check_report(lambda w, inp: forward(inp, w, SMALL), params, low, loss)
    assert set(report) == {"omega1", "omega2"}
    assert all(r["grad_norm"] > 0 for r in report.values())
    assert max(r["max_rel_error"] for r in report.values()) < 1e-3, report


def test_full_model_gradients(rng):
    params = init_params(SMALL, 4, zero_head=False)
    low, high = rng.uniform(size=(2, 16, 16, 3))

    def loss(outputs):
        return compute_losses(*outputs, high, SMALL).total

    report = grad_check_report(lambda w, inp: forward(inp, w, SMALL), params, low, loss,
                               samples_per_param=2)
    assert len(report) == len(params)
    worst = max(r["max_rel_error"] for r in report.values())
    assert worst < 1e-3, sorted(report.items(), key=lambda kv: -kv[1]["max_rel_error"])[:5]


# -- training -------------------------------------------------------------

def test_zero_learning_rate_leaves_params(rng):
    params = init_params(SMALL, 0, zero_head=False)
    before = params.copy()
    low, high = rng.uniform(size=(2, 1, 16, 16, 3))
    train_step(params, low, high, AdamState(), SMALL,
               TrainConfig(learning_rate=0.0, min_learning_rate=0.0))
    assert all(np.array_equal(params[n], before[n]) for n in params)


def test_single_pair_training_trends_down(rng):
    high = rng.uniform(0.2, 0.9, (32, 32, 3))
    low = 0.3 * high
    params = init_params(SMALL, 0)
    state = AdamState()
    train = TrainConfig(steps=50, learning_rate=2e-3)
    totals = [train_step(params, low[None], high[None], state, SMALL, train)["total"]
              for _ in range(50)]
    windows = np.array(totals).reshape(5, 10).mean(axis=1)
    assert np.all(np.diff(windows) < 0), windows


def test_fit_is_seed_deterministic(rng):
    pairs = [tuple(rng.uniform(size=(2, 16, 16, 3))) for _ in range(2)]
    train = TrainConfig(steps=3, batch_size=2, crop=8, eval_every=2, seed=11)
    runs = [fit(init_params(SMALL, 0), pairs, SMALL, train)[0] for _ in range(2)]
    assert runs[0] == runs[1]
    collapsed = fit(init_params(SMALL, 0), pairs, ModelConfig(**{**SMALL.__dict__, "lam": 0.0}),
                    train)[0]
    assert all(r["total"] == r["charbonnier"] for r in collapsed)
