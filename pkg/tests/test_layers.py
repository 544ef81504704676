import numpy as np
import pytest
from numpy.testing import assert_allclose

from waverep.layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2,
    ReLU,
    softmax,
    softmax_xent,
    softmax_xent_batch,
    xavier_init,
)


def numerical_grad(f, x, eps=1e-6):
    """Central finite differences of a scalar function, element by element."""
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        hi = f()
        x[idx] = orig - eps
        lo = f()
        x[idx] = orig
        grad[idx] = (hi - lo) / (2 * eps)
    return grad


def rel_err(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / scale


def conv_reference(x, w, b):
    """Direct quadruple loop, the slow but obvious definition."""
    n, c, h, ww = x.shape
    o = w.shape[0]
    out = np.zeros((n, o, h - 2, ww - 2))
    for ni in range(n):
        for oi in range(o):
            for i in range(h - 2):
                for j in range(ww - 2):
                    out[ni, oi, i, j] = (
                        np.sum(x[ni, :, i : i + 3, j : j + 3] * w[oi]) + b[oi]
                    )
    return out


def test_conv_all_ones_kernel():
    layer = Conv2D(1, 1, np.random.default_rng(0), dtype=np.float64)
    layer.params["w"][...] = 1.0
    layer.params["b"][...] = 1.0
    out = layer.forward(np.ones((1, 1, 5, 5)))
    assert out.shape == (1, 1, 3, 3)
    assert_allclose(out, 10.0)  # 9 taps of 1 plus the bias


def test_conv_matches_reference():
    rng = np.random.default_rng(1)
    layer = Conv2D(3, 4, rng, dtype=np.float64)
    x = rng.standard_normal((2, 3, 8, 7))
    out = layer.forward(x)
    assert out.shape == (2, 4, 6, 5)
    assert rel_err(out, conv_reference(x, layer.params["w"], layer.params["b"])) < 1e-12


def test_conv_rejects_small_input():
    layer = Conv2D(1, 1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        layer.forward(np.zeros((1, 1, 2, 5)))
    with pytest.raises(ValueError):
        layer.forward(np.zeros((1, 2, 5, 5)))  # channel mismatch


def test_conv_backward_requires_training_forward():
    layer = Conv2D(1, 1, np.random.default_rng(0))
    layer.forward(np.zeros((1, 1, 4, 4)), train=False)
    with pytest.raises(RuntimeError):
        layer.backward(np.zeros((1, 1, 2, 2)))


@pytest.mark.parametrize("seed", range(6))
def test_conv_gradients(seed):
    rng = np.random.default_rng(seed)
    layer = Conv2D(2, 3, rng, dtype=np.float64)
    x = rng.standard_normal((2, 2, 6, 5))
    dout = rng.standard_normal((2, 3, 4, 3))

    def loss():
        return float(np.sum(layer.forward(x, train=True) * dout))

    loss()
    dx = layer.backward(dout)
    assert rel_err(dx, numerical_grad(loss, x)) < 1e-7
    assert rel_err(layer.grads["w"], numerical_grad(loss, layer.params["w"])) < 1e-7
    assert rel_err(layer.grads["b"], numerical_grad(loss, layer.params["b"])) < 1e-7


def test_pool_ceil_shapes():
    pool = MaxPool2()
    assert pool.forward(np.zeros((1, 1, 5, 5))).shape == (1, 1, 3, 3)
    assert pool.forward(np.zeros((2, 3, 99, 99))).shape == (2, 3, 50, 50)
    assert pool.forward(np.zeros((1, 1, 2, 2))).shape == (1, 1, 1, 1)


def test_pool_hand_values():
    x = np.array([[1.0, 2.0, 7.0], [3.0, 4.0, -1.0], [0.5, 0.2, 6.0]]).reshape(1, 1, 3, 3)
    out = MaxPool2().forward(x)
    assert_allclose(out[0, 0], [[4.0, 7.0], [0.5, 6.0]])


def test_pool_backward_routes_to_argmax():
    pool = MaxPool2()
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
    pool.forward(x, train=True)
    dx = pool.backward(np.array([[[[5.0]]]]))
    assert_allclose(dx[0, 0], [[0.0, 0.0], [0.0, 5.0]])


@pytest.mark.parametrize("seed", range(6))
def test_pool_gradients(seed):
    rng = np.random.default_rng(seed)
    pool = MaxPool2()
    # distinct values keep the argmax stable under the FD probe
    x = rng.permutation(7 * 5 * 2 * 3).astype(np.float64).reshape(2, 3, 7, 5)
    dout = rng.standard_normal((2, 3, 4, 3))

    def loss():
        return float(np.sum(pool.forward(x, train=True) * dout))

    loss()
    dx = pool.backward(dout)
    assert rel_err(dx, numerical_grad(loss, x, eps=1e-3)) < 1e-7


def test_dense_known_values():
    layer = Dense(2, 2, np.random.default_rng(0), dtype=np.float64)
    layer.params["w"][...] = [[1.0, 2.0], [3.0, 4.0]]
    layer.params["b"][...] = [0.5, -0.5]
    out = layer.forward(np.array([[1.0, 1.0]]))
    assert_allclose(out, [[3.5, 6.5]])


@pytest.mark.parametrize("seed", range(6))
def test_dense_gradients(seed):
    rng = np.random.default_rng(seed)
    layer = Dense(7, 4, rng, dtype=np.float64)
    x = rng.standard_normal((3, 7))
    dout = rng.standard_normal((3, 4))

    def loss():
        return float(np.sum(layer.forward(x, train=True) * dout))

    loss()
    dx = layer.backward(dout)
    assert rel_err(dx, numerical_grad(loss, x)) < 1e-8
    assert rel_err(layer.grads["w"], numerical_grad(loss, layer.params["w"])) < 1e-8
    assert rel_err(layer.grads["b"], numerical_grad(loss, layer.params["b"])) < 1e-8


def test_relu_forward_backward():
    relu = ReLU()
    x = np.array([[-1.0, 0.0, 2.0]])
    assert_allclose(relu.forward(x, train=True), [[0.0, 0.0, 2.0]])
    assert_allclose(relu.backward(np.array([[5.0, 5.0, 5.0]])), [[0.0, 0.0, 5.0]])


def test_flatten_roundtrip():
    flat = Flatten()
    x = np.arange(24.0).reshape(2, 3, 2, 2)
    out = flat.forward(x, train=True)
    assert out.shape == (2, 12)
    assert_allclose(flat.backward(out), x)


def test_dropout_eval_is_identity():
    layer = Dropout(0.3)
    x = np.random.default_rng(0).standard_normal((4, 5))
    assert_allclose(layer.forward(x, train=False), x)


def test_dropout_train_scales_survivors():
    layer = Dropout(0.5)
    layer.rng = np.random.default_rng(0)
    x = np.ones((100, 100))
    out = layer.forward(x, train=True)
    dropped = out == 0
    assert 0.45 < dropped.mean() < 0.55
    assert_allclose(out[~dropped], 2.0)  # 1 / (1 - p)


def test_dropout_fixed_mask_and_backward():
    layer = Dropout(0.5)
    mask = np.array([[True, False], [False, True]])
    layer.fixed_mask = mask
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = layer.forward(x, train=True)
    assert_allclose(out, [[2.0, 0.0], [0.0, 8.0]])
    dx = layer.backward(np.ones((2, 2)))
    assert_allclose(dx, [[2.0, 0.0], [0.0, 2.0]])


def test_dropout_needs_rng_in_train_mode():
    layer = Dropout(0.3)
    with pytest.raises(RuntimeError):
        layer.forward(np.zeros((2, 2)), train=True)


def test_dropout_zero_rate_is_identity_in_train():
    layer = Dropout(0.0)
    layer.rng = np.random.default_rng(0)
    x = np.random.default_rng(1).standard_normal((5, 5))
    assert_allclose(layer.forward(x, train=True), x)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(0)
    p = softmax(rng.standard_normal((6, 9)) * 30)
    assert_allclose(p.sum(axis=1), 1.0, rtol=1e-12)
    assert p.min() >= 0


def test_softmax_shift_invariant():
    x = np.array([[1.0, 2.0, 3.0]])
    assert_allclose(softmax(x), softmax(x + 1000.0), rtol=1e-12)


def test_xent_hand_value():
    _, loss = softmax_xent(np.array([1.0, 2.0, 3.0]), 2)
    assert loss == pytest.approx(0.40760596444438104, rel=1e-12)


def test_xent_uniform_logits():
    _, loss = softmax_xent(np.zeros(31), 7)
    assert loss == pytest.approx(np.log(31.0), rel=1e-12)


def test_xent_validates_label():
    with pytest.raises(ValueError):
        softmax_xent(np.zeros(3), 3)
    with pytest.raises(ValueError):
        softmax_xent(np.zeros(1), 0)


@pytest.mark.parametrize("seed", range(6))
def test_xent_batch_gradient(seed):
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((4, 5))
    labels = rng.integers(0, 5, size=4)

    def loss():
        return softmax_xent_batch(logits, labels)[1]

    _, _, dlogits = softmax_xent_batch(logits, labels)
    assert rel_err(dlogits, numerical_grad(loss, logits)) < 1e-7


def test_xent_batch_loss_is_mean():
    logits = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    labels = np.array([2, 0])
    _, loss, _ = softmax_xent_batch(logits, labels)
    expected = (0.40760596444438104 + np.log(3.0)) / 2
    assert loss == pytest.approx(expected, rel=1e-12)


def test_xavier_bounds_and_spread():
    rng = np.random.default_rng(0)
    w = xavier_init(512, 256, (256, 512), rng, dtype=np.float64)
    limit = np.sqrt(6.0 / (512 + 256))
    assert w.shape == (256, 512)
    assert w.max() <= limit and w.min() >= -limit
    assert abs(w.mean()) < limit / 50
    # uniform std is limit/sqrt(3)
    assert w.std() == pytest.approx(limit / np.sqrt(3.0), rel=0.05)
