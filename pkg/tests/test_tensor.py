import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cortex_bench.errors import ConfigError, DimensionError
from cortex_bench.tensor import (
    SGD,
    NormStateError,
    RunningStats,
    Tensor,
    batch_norm,
    check_gradients,
    conv2d,
    conv_output_size,
    cross_entropy,
    global_avg_pool,
    group_norm,
    linear,
    load_checkpoint,
    maxpool2d,
    relu,
    save_checkpoint,
    sgd_step,
    softmax,
)
from cortex_bench.tensor.checkpoint import ChecksumError


def t64(a, grad=False):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=grad)


def brute_conv(x, w, b, stride, pad):
    """Sliding-window sum, written independently of the GEMM path."""
    n, c, h, wd = x.shape
    k, _, kh, kw = w.shape
    xp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, k, ho, wo))
    for ni in range(n):
        for ki in range(k):
            for i in range(ho):
                for j in range(wo):
                    win = xp[ni, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[ni, ki, i, j] = (win * w[ki]).sum() + (0 if b is None else b[ki])
    return out


# conv2d -------------------------------------------------------------------

def test_conv_identity_kernel():
    out = conv2d(t64(np.ones((1, 1, 3, 3))), t64(np.ones((1, 1, 1, 1))))
    np.testing.assert_array_equal(out.data, np.ones((1, 1, 3, 3)))


def test_conv_zero_input_gives_bias():
    b = t64([0.5, -2.0])
    out = conv2d(t64(np.zeros((2, 3, 5, 5))), t64(np.random.default_rng(0).normal(size=(2, 3, 3, 3))), b, 1, 1)
    np.testing.assert_array_equal(out.data, np.broadcast_to(b.data.reshape(1, 2, 1, 1), out.shape))
    out = conv2d(t64(np.zeros((1, 3, 5, 5))), t64(np.ones((2, 3, 3, 3))))
    assert not out.data.any()


def test_conv_hand_example():
    x = t64(np.arange(1, 10).reshape(1, 1, 3, 3))
    w = t64(np.array([[1, 0], [0, 1]]).reshape(1, 1, 2, 2))
    expected = brute_conv(x.data, w.data, None, 1, 0)
    np.testing.assert_array_equal(expected[0, 0], [[6, 8], [12, 14]])
    np.testing.assert_array_equal(conv2d(x, w).data[0, 0], [[6, 8], [12, 14]])


@settings(max_examples=60, deadline=None)
@given(h=st.integers(1, 9), w=st.integers(1, 9), k=st.integers(1, 4), stride=st.integers(1, 3),
       pad=st.integers(0, 2), seed=st.integers(0, 10_000))
def test_conv_shape_algebra_and_oracle(h, w, k, stride, pad, seed):
    if k > h + 2 * pad or k > w + 2 * pad:
        with pytest.raises(DimensionError):
            conv2d(t64(np.ones((1, 2, h, w))), t64(np.ones((3, 2, k, k))), stride=stride, padding=pad)
        return
    rng = np.random.default_rng(seed)
    x, wt, b = rng.normal(size=(2, 2, h, w)), rng.normal(size=(3, 2, k, k)), rng.normal(size=3)
    out = conv2d(t64(x), t64(wt), t64(b), stride, pad)
    assert out.shape == (2, 3, conv_output_size(h, k, stride, pad), conv_output_size(w, k, stride, pad))
    np.testing.assert_allclose(out.data, brute_conv(x, wt, b, stride, pad), atol=1e-12)


def test_conv_channel_mismatch_names_axes():
    with pytest.raises(DimensionError, match="axis 1"):
        conv2d(t64(np.ones((1, 2, 4, 4))), t64(np.ones((1, 3, 3, 3))))


# pooling -------------------------------------------------------------------

def test_maxpool_examples():
    assert maxpool2d(t64([[[[1, 2], [3, 4]]]]), 2, 2).data.item() == 4
    np.testing.assert_array_equal(maxpool2d(t64(np.full((1, 2, 4, 4), 3.5)), 2, 2).data, 3.5)
    ramp = np.arange(16.0).reshape(1, 1, 4, 4)
    oracle = np.array([[ramp[0, 0, i:i + 2, j:j + 2].max() for j in (0, 2)] for i in (0, 2)])
    np.testing.assert_array_equal(oracle, [[5, 7], [13, 15]])
    np.testing.assert_array_equal(maxpool2d(t64(ramp), 2, 2).data[0, 0], oracle)


def test_maxpool_padding_never_wins():
    x = t64(-np.ones((1, 1, 4, 4)))
    out = maxpool2d(x, 3, 2, padding=1)
    assert out.shape == (1, 1, 2, 2)
    np.testing.assert_array_equal(out.data, -1)


# normalization ----------------------------------------------------------------

def test_batch_norm_examples():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(64, 3, 4, 4))
    x = (x - x.mean(axis=(0, 2, 3), keepdims=True)) / x.std(axis=(0, 2, 3), keepdims=True)
    out = batch_norm(t64(x), t64(np.ones(3)), t64(np.zeros(3)), eps=1e-12)
    assert np.abs(out.data - x).max() <= 1e-5

    beta = t64([0.1, 0.2, 0.3])
    out = batch_norm(t64(x), t64(np.zeros(3)), beta)
    np.testing.assert_array_equal(out.data, np.broadcast_to(beta.data.reshape(1, 3, 1, 1), x.shape))

    pair = t64(np.array([1.0, 3.0]).reshape(2, 1, 1, 1))
    out = batch_norm(pair, t64([1.0]), t64([0.0]), eps=0.0)
    np.testing.assert_allclose(out.data.ravel(), [-1.0, 1.0])


def test_batch_norm_eval_requires_stats():
    stats = RunningStats(2, dtype=np.float64)
    x = t64(np.random.default_rng(0).normal(size=(8, 2, 3, 3)))
    with pytest.raises(NormStateError):
        batch_norm(x, t64(np.ones(2)), t64(np.zeros(2)), stats, mode="eval")
    batch_norm(x, t64(np.ones(2)), t64(np.zeros(2)), stats, mode="train")
    m = x.data.mean(axis=(0, 2, 3))
    np.testing.assert_allclose(stats.mean, 0.1 * m)
    out = batch_norm(x, t64(np.ones(2)), t64(np.zeros(2)), stats, mode="eval")
    assert np.isfinite(out.data).all()


def test_group_norm_examples():
    x = t64(np.array([1.0, 3.0, 5.0, 7.0]).reshape(1, 2, 1, 2))
    out = group_norm(x, 1, t64([1.0, 1.0]), t64([0.0, 0.0]), eps=0.0)
    np.testing.assert_allclose(out.data.ravel(), [-1.3416, -0.4472, 0.4472, 1.3416], atol=1e-4)

    const = t64(np.full((2, 4, 3, 3), 7.0))
    beta = t64([1.0, 2.0, 3.0, 4.0])
    out = group_norm(const, 2, t64(np.ones(4)), beta)
    np.testing.assert_allclose(out.data, np.broadcast_to(beta.data.reshape(1, 4, 1, 1), const.shape))

    rng = np.random.default_rng(2)
    y = rng.normal(size=(3, 4, 5, 5))
    inst = (y - y.mean(axis=(2, 3), keepdims=True)) / np.sqrt(y.var(axis=(2, 3), keepdims=True) + 1e-5)
    out = group_norm(t64(y), 4, t64(np.ones(4)), t64(np.zeros(4)))
    np.testing.assert_allclose(out.data, inst, atol=1e-12)


def test_group_norm_indivisible():
    with pytest.raises(ConfigError):
        group_norm(t64(np.ones((1, 6, 2, 2))), 4, t64(np.ones(6)), t64(np.zeros(6)))


# classification ------------------------------------------------------------

def test_cross_entropy_examples():
    assert cross_entropy(t64(np.zeros((1, 10))), [3]).item() == pytest.approx(math.log(10), abs=1e-12)
    assert cross_entropy(t64([[1.0, 2.0]]), [1]).item() == pytest.approx(math.log1p(math.exp(-1)), abs=1e-12)
    assert math.log1p(math.exp(-1)) == pytest.approx(0.313262, abs=1e-6)
    losses = [cross_entropy(t64([[z, 0.0, 0.0]]), [0]).item() for z in (0, 1, 5, 20, 50)]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-20


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 6), k=st.integers(2, 12))
def test_softmax_rows_and_ce_nonnegative(seed, n, k):
    logits = np.random.default_rng(seed).normal(scale=10, size=(n, k))
    s = softmax(t64(logits)).data
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-6)
    assert cross_entropy(t64(logits), np.zeros(n, dtype=int)).item() >= 0


# autodiff ---------------------------------------------------------------------

def test_backward_simple():
    theta = t64([1.0, -2.0, 3.0], grad=True)
    theta.sum().backward()
    np.testing.assert_array_equal(theta.grad, np.ones(3))
    theta = t64([1.0, -2.0], grad=True)
    ((theta * theta).sum() * 0.5).backward()
    np.testing.assert_array_equal(theta.grad, [1.0, -2.0])


def test_backward_requires_scalar():
    theta = t64([1.0, 2.0], grad=True)
    with pytest.raises(RuntimeError):
        (theta * 2).backward()


def composed_loss(x, w, gamma, beta, lw, lb, labels):
    h = conv2d(x, w, None, 2, 1)
    h = relu(batch_norm(h, gamma, beta))
    h = maxpool2d(h, 2, 1)
    return cross_entropy(linear(global_avg_pool(h), lw, lb), labels)


def test_composed_graph_gradcheck():
    rng = np.random.default_rng(3)
    x = t64(rng.normal(size=(3, 2, 6, 6)), grad=True)
    w = t64(rng.normal(size=(4, 2, 3, 3)), grad=True)
    gamma, beta = t64(rng.normal(size=4), grad=True), t64(rng.normal(size=4), grad=True)
    lw, lb = t64(rng.normal(size=(5, 4)), grad=True), t64(rng.normal(size=5), grad=True)
    labels = np.array([0, 3, 4])
    err = check_gradients(lambda: composed_loss(x, w, gamma, beta, lw, lb, labels), [x, w, gamma, beta, lw, lb])
    assert err < 1e-4


def test_determinism_bit_identical():
    def run():
        rng = np.random.default_rng(11)
        x = Tensor(rng.normal(size=(4, 3, 8, 8)).astype(np.float32))
        w = Tensor(rng.normal(size=(5, 3, 3, 3)).astype(np.float32), requires_grad=True)
        loss = cross_entropy(global_avg_pool(relu(conv2d(x, w, None, 1, 1))), [0, 1, 2, 3])
        loss.backward()
        return loss.data.tobytes(), w.grad.tobytes()

    assert run() == run()


# optimizer ---------------------------------------------------------------------

def test_sgd_examples():
    (p,), _ = sgd_step([np.array(1.0)], [np.array(0.5)], lr=1.0, momentum=0.0)
    assert p == 0.5
    (p,), (v,) = sgd_step([np.array(2.0)], [np.array(0.0)], lr=0.3, momentum=0.9)
    assert p == 2.0 and v == 0.0

    # hand iteration: v1=1, th1=-0.1; v2=1.9, th2=-0.29
    theta = Tensor(np.array([0.0]), requires_grad=True)
    opt = SGD([theta], lr=0.1, momentum=0.9)
    for _ in range(2):
        theta.grad = np.array([1.0])
        opt.step()
    assert theta.data[0] == pytest.approx(-0.29, abs=1e-12)
    params, vel = [np.array(0.0)], None
    for _ in range(2):
        params, vel = sgd_step(params, [np.array(1.0)], 0.1, 0.9, velocities=vel)
    assert params[0] == pytest.approx(-0.29, abs=1e-12)


def test_sgd_weight_decay():
    (p,), (v,) = sgd_step([np.array(2.0)], [np.array(1.0)], lr=0.5, momentum=0.0, weight_decay=0.1)
    assert v == pytest.approx(1.2) and p == pytest.approx(1.4)


# checkpoint ----------------------------------------------------------------------

def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {"a.weight": rng.normal(size=(3, 2)).astype(np.float32), "b": np.arange(4, dtype=np.float32)}
    path = save_checkpoint(tmp_path / "m.ckpt", tensors, graph={"kind": "toy"}, seed=5)
    ck = load_checkpoint(path)
    assert ck.seed == 5 and ck.graph == {"kind": "toy"}
    assert list(ck.tensors) == ["a.weight", "b"]
    for k in tensors:
        np.testing.assert_array_equal(ck.tensors[k], tensors[k])
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-3])
    with pytest.raises(ChecksumError):
        load_checkpoint(path)
