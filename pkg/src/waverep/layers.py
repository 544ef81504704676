"""From-scratch network layers over numpy arrays.

Every layer exposes forward(x, train=False) and backward(dout); parameter
layers keep their tensors in ``params`` and matching gradients in
``grads`` so the optimizer can update in place.  Arrays stay in whatever
float dtype the caller feeds in (float32 for training, float64 for the
finite-difference tests).
"""

import numpy as np


def xavier_init(fan_in: int, fan_out: int, dims, rng, dtype=np.float32) -> np.ndarray:
    """Uniform draws in [-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be positive")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=dims).astype(dtype)


def _im2col(x: np.ndarray):
    # (N, C, H, W) -> (C*9, N*OH*OW) for 3x3 valid windows
    n, c, h, w = x.shape
    oh, ow = h - 2, w - 2
    cols = np.empty((c, 9, n, oh * ow), dtype=x.dtype)
    for di in range(3):
        for dj in range(3):
            cols[:, di * 3 + dj] = (
                x[:, :, di:di + oh, dj:dj + ow].transpose(1, 0, 2, 3).reshape(c, n, oh * ow)
            )
    return cols.reshape(c * 9, n * oh * ow), oh, ow


class Conv2D:
    """3x3 valid cross-correlation with per-channel bias."""

    def __init__(self, in_channels: int, out_channels: int, rng, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        w = xavier_init(
            9 * in_channels, 9 * out_channels,
            (out_channels, in_channels, 3, 3), rng, dtype,
        )
        self.params = {"w": w, "b": np.zeros(out_channels, dtype=dtype)}
        self.grads = {"w": np.zeros_like(w), "b": np.zeros_like(self.params["b"])}
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        n, c, h, w_ = x.shape
        if c != self.in_channels:
            raise ValueError("expected %d input channels, got %d" % (self.in_channels, c))
        if h < 3 or w_ < 3:
            raise ValueError("spatial extent %dx%d too small for a 3x3 kernel" % (h, w_))
        cols, oh, ow = _im2col(x)
        o = self.out_channels
        out = (self.params["w"].reshape(o, -1) @ cols).reshape(o, n, oh, ow)
        out = out.transpose(1, 0, 2, 3) + self.params["b"][None, :, None, None]
        self._cache = (x.shape, cols) if train else None
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward before a training-mode forward")
        x_shape, cols = self._cache
        n, c, h, w_ = x_shape
        oh, ow = h - 2, w_ - 2
        o = self.out_channels
        d2 = dout.transpose(1, 0, 2, 3).reshape(o, -1)
        self.grads["w"][...] = (d2 @ cols.T).reshape(self.params["w"].shape)
        self.grads["b"][...] = d2.sum(axis=1)
        dcols = (self.params["w"].reshape(o, -1).T @ d2).reshape(c, 9, n, oh, ow)
        dx = np.zeros(x_shape, dtype=dout.dtype)
        for di in range(3):
            for dj in range(3):
                dx[:, :, di:di + oh, dj:dj + ow] += dcols[:, di * 3 + dj].transpose(1, 0, 2, 3)
        return dx


class MaxPool2:
    """2x2 max pooling, stride 2, ceil mode.

    A trailing odd row or column forms a partial window whose max is taken
    over the elements present.  The argmax position per window is cached so
    backward routes each gradient to exactly one input.
    """

    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        n, c, h, w = x.shape
        ph, pw = (h + 1) // 2, (w + 1) // 2
        padded = np.full((n, c, ph * 2, pw * 2), -np.inf, dtype=x.dtype)
        padded[:, :, :h, :w] = x
        windows = (
            padded.reshape(n, c, ph, 2, pw, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ph, pw, 4)
        )
        idx = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        self._cache = (x.shape, idx) if train else None
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward before a training-mode forward")
        (n, c, h, w), idx = self._cache
        ph, pw = (h + 1) // 2, (w + 1) // 2
        dwin = np.zeros((n, c, ph, pw, 4), dtype=dout.dtype)
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dpad = (
            dwin.reshape(n, c, ph, pw, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ph * 2, pw * 2)
        )
        return dpad[:, :, :h, :w]


class Dense:
    """Affine layer; weights are (out_features, in_features)."""

    def __init__(self, in_features: int, out_features: int, rng, dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        w = xavier_init(in_features, out_features, (out_features, in_features), rng, dtype)
        self.params = {"w": w, "b": np.zeros(out_features, dtype=dtype)}
        self.grads = {"w": np.zeros_like(w), "b": np.zeros_like(self.params["b"])}
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.shape[1] != self.in_features:
            raise ValueError("expected %d features, got %d" % (self.in_features, x.shape[1]))
        self._cache = x if train else None
        return x @ self.params["w"].T + self.params["b"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward before a training-mode forward")
        self.grads["w"][...] = dout.T @ self._cache
        self.grads["b"][...] = dout.sum(axis=0)
        return dout @ self.params["w"]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._mask = x > 0 if train else None
        return np.maximum(x, 0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError("backward before a training-mode forward")
        return dout * self._mask


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._shape)


class Dropout:
    """Inverted dropout: survivors are scaled by 1/(1-p), eval is identity.

    The mask generator is injected via ``rng``; tests may pin ``fixed_mask``
    to make the layer deterministic for finite differencing.
    """

    def __init__(self, p: float):
        if not 0 <= p < 1:
            raise ValueError("dropout probability must be in [0, 1)")
        self.p = p
        self.rng = None
        self.fixed_mask = None
        self._mask = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if not train or self.p == 0:
            self._mask = None
            return x
        if self.fixed_mask is not None:
            keep = self.fixed_mask
        else:
            if self.rng is None:
                raise RuntimeError("training-mode dropout needs an rng")
            keep = self.rng.random(x.shape) >= self.p
        self._mask = keep.astype(x.dtype) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dout
        return dout * self._mask


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; accepts a single vector or a batch."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, label: int):
    """Probabilities and cross-entropy loss for one logit vector."""
    logits = np.asarray(logits).reshape(-1)
    if len(logits) < 2:
        raise ValueError("need at least 2 classes")
    if not 0 <= label < len(logits):
        raise ValueError("label %d out of range" % label)
    probs = softmax(logits)
    return probs, -np.log(probs[label])


def softmax_xent_batch(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over a batch.

    Returns (probs, loss, dlogits) where dlogits is the gradient of the
    mean loss, i.e. (probs - onehot) / batch_size, in the logits' dtype.
    """
    n = logits.shape[0]
    probs = softmax(logits)
    # a saturated row gives log(0) = -inf; the caller treats the resulting
    # non-finite loss as divergence, so don't warn about it here
    with np.errstate(divide="ignore"):
        nll = -np.log(probs[np.arange(n), labels])
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return probs, float(nll.mean()), dlogits.astype(logits.dtype)
