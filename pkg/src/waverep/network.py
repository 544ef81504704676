"""The classification network: six 3x3 conv blocks, three dense layers.

Feeding a 1x204x204 input through the default layout walks the shape
chain

    32x202x202 -> 32x101x101 -> 32x99x99 -> 32x50x50 -> 64x48x48
    -> 64x24x24 -> 64x22x22 -> 64x11x11 -> 128x9x9 -> 128x5x5
    -> 128x3x3 -> 128x2x2 -> 512 -> 256 -> n_classes

where every pool is 2x2 ceil-mode (odd extents keep their trailing
partial window).  Dropout sits on the input of each dense layer.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from waverep.layers import Conv2D, Dense, Dropout, Flatten, MaxPool2, ReLU


class CheckpointFormatError(ValueError):
    """Raised for malformed or incompatible checkpoint files."""


@dataclass
class NetworkSpec:
    n_classes: int
    in_shape: tuple = (1, 204, 204)
    conv_channels: tuple = (32, 32, 64, 64, 128, 128)
    dense_units: tuple = (512, 256)
    dropout_p: float = 0.3

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")

    def digest(self) -> bytes:
        text = "%d|%s|%s|%s|%.6g" % (
            self.n_classes, self.in_shape, self.conv_channels,
            self.dense_units, self.dropout_p,
        )
        return hashlib.sha256(text.encode()).digest()

    def shape_chain(self) -> list:
        """Layer output shapes, input first, logits last."""
        chain = [self.in_shape]
        c, h, w = self.in_shape
        for out_c in self.conv_channels:
            h, w = h - 2, w - 2
            chain.append((out_c, h, w))
            h, w = (h + 1) // 2, (w + 1) // 2
            chain.append((out_c, h, w))
            c = out_c
        for units in self.dense_units:
            chain.append((units,))
        chain.append((self.n_classes,))
        return chain

    def flat_features(self) -> int:
        c, h, w = self.shape_chain()[2 * len(self.conv_channels)]
        return c * h * w

    def param_shapes(self) -> list:
        """Tensor shapes in checkpoint order: conv w/b pairs then dense."""
        shapes = []
        in_c = self.in_shape[0]
        for out_c in self.conv_channels:
            shapes += [(out_c, in_c, 3, 3), (out_c,)]
            in_c = out_c
        in_f = self.flat_features()
        for units in self.dense_units + (self.n_classes,):
            shapes += [(units, in_f), (units,)]
            in_f = units
        return shapes


class Network:
    """Layer stack with explicit forward/backward passes."""

    def __init__(self, spec: NetworkSpec, init_seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.dtype = dtype
        rng = np.random.default_rng(init_seed)
        self.layers = []
        in_c = spec.in_shape[0]
        for out_c in spec.conv_channels:
            self.layers += [Conv2D(in_c, out_c, rng, dtype), ReLU(), MaxPool2()]
            in_c = out_c
        self.layers.append(Flatten())
        in_f = spec.flat_features()
        for units in spec.dense_units:
            self.layers += [Dropout(spec.dropout_p), Dense(in_f, units, rng, dtype), ReLU()]
            in_f = units
        self.layers += [Dropout(spec.dropout_p), Dense(in_f, spec.n_classes, rng, dtype)]

    def set_dropout_rng(self, rng):
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.rng = rng

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dlogits = layer.backward(dlogits)
        return dlogits

    def param_list(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "params"):
                out += [layer.params["w"], layer.params["b"]]
        return out

    def grad_list(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "grads"):
                out += [layer.grads["w"], layer.grads["b"]]
        return out

    def load_params(self, tensors):
        own = self.param_list()
        if len(own) != len(tensors):
            raise ValueError("expected %d tensors, got %d" % (len(own), len(tensors)))
        for dst, src in zip(own, tensors):
            if dst.shape != src.shape:
                raise ValueError("shape mismatch: %s vs %s" % (dst.shape, src.shape))
            dst[...] = src.astype(self.dtype)

    def predict(self, x: np.ndarray, batch_size: int = 50) -> np.ndarray:
        """Argmax class per example, dropout off."""
        out = np.empty(len(x), dtype=np.int64)
        for start in range(0, len(x), batch_size):
            logits = self.forward(x[start:start + batch_size], train=False)
            out[start:start + batch_size] = logits.argmax(axis=1)
        return out


@dataclass
class Checkpoint:
    """Learned tensors plus the metadata needed to rebuild the network."""

    spec: NetworkSpec
    params: list
    epoch: int = 0
    seeds: tuple = (0, 0, 0)  # init, shuffle, dropout

    def to_network(self, dtype=np.float32) -> Network:
        net = Network(self.spec, init_seed=0, dtype=dtype)
        net.load_params(self.params)
        return net


MAGIC = b"WREP"
VERSION = 1


def save_checkpoint(path, ckpt: Checkpoint):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(ckpt.spec.digest())
        fh.write(struct.pack("<I", ckpt.spec.n_classes))
        for tensor in ckpt.params:
            dims = tensor.shape
            fh.write(struct.pack("<I", len(dims)))
            fh.write(struct.pack("<%dI" % len(dims), *dims))
            fh.write(tensor.astype("<f4").tobytes())
        fh.write(struct.pack("<I3Q", ckpt.epoch, *ckpt.seeds))


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Only the default layout (parameterized by class count) can be rebuilt
    from the header; anything else fails the stored digest check.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 44 or raw[:4] != MAGIC:
        raise CheckpointFormatError("not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise CheckpointFormatError("unsupported version %d" % version)
    digest = raw[8:40]
    (n_classes,) = struct.unpack_from("<I", raw, 40)
    spec = NetworkSpec(n_classes=n_classes)
    if spec.digest() != digest:
        raise CheckpointFormatError(
            "stored digest does not match the default %d-class layout" % n_classes
        )
    pos = 44
    params = []
    for shape in spec.param_shapes():
        (ndim,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        dims = struct.unpack_from("<%dI" % ndim, raw, pos)
        pos += 4 * ndim
        if dims != shape:
            raise CheckpointFormatError("tensor dims %s, layout wants %s" % (dims, shape))
        count = int(np.prod(dims))
        tensor = np.frombuffer(raw, dtype="<f4", count=count, offset=pos)
        pos += 4 * count
        params.append(tensor.reshape(dims).copy())
    if pos + 28 > len(raw):
        raise CheckpointFormatError("metadata block missing")
    epoch, s0, s1, s2 = struct.unpack_from("<I3Q", raw, pos)
    return Checkpoint(spec=spec, params=params, epoch=epoch, seeds=(s0, s1, s2))
