import numpy as np
import pytest
from numpy.testing import assert_allclose

from waverep.layers import Dropout, softmax_xent_batch
from waverep.network import (
    Checkpoint,
    CheckpointFormatError,
    Network,
    NetworkSpec,
    load_checkpoint,
    save_checkpoint,
)

TABLE_CHAIN = [
    (1, 204, 204),
    (32, 202, 202), (32, 101, 101),
    (32, 99, 99), (32, 50, 50),
    (64, 48, 48), (64, 24, 24),
    (64, 22, 22), (64, 11, 11),
    (128, 9, 9), (128, 5, 5),
    (128, 3, 3), (128, 2, 2),
    (512,), (256,), (31,),
]


def tiny_spec(n_classes=3):
    return NetworkSpec(
        n_classes=n_classes, in_shape=(1, 10, 10),
        conv_channels=(2, 3), dense_units=(6,), dropout_p=0.25,
    )


def test_shape_chain_matches_reference_table():
    assert NetworkSpec(n_classes=31).shape_chain() == TABLE_CHAIN


def test_flat_features_default():
    assert NetworkSpec(n_classes=5).flat_features() == 512


def test_param_shapes_default():
    shapes = NetworkSpec(n_classes=31).param_shapes()
    assert len(shapes) == 18
    assert shapes[0] == (32, 1, 3, 3)
    assert shapes[1] == (32,)
    assert shapes[8] == (128, 64, 3, 3)
    assert shapes[10] == (128, 128, 3, 3)
    assert shapes[12] == (512, 512)
    assert shapes[-2] == (31, 256)
    assert shapes[-1] == (31,)


def test_spec_rejects_degenerate_class_count():
    with pytest.raises(ValueError):
        NetworkSpec(n_classes=1)


def test_network_param_list_matches_declared_shapes():
    spec = tiny_spec()
    net = Network(spec, init_seed=0)
    assert [p.shape for p in net.param_list()] == spec.param_shapes()
    assert [g.shape for g in net.grad_list()] == spec.param_shapes()


def test_forward_shapes_tiny():
    net = Network(tiny_spec(), init_seed=1)
    out = net.forward(np.random.default_rng(0).standard_normal((4, 1, 10, 10)))
    assert out.shape == (4, 3)
    assert np.all(np.isfinite(out))


def test_init_is_seeded():
    a = Network(tiny_spec(), init_seed=5)
    b = Network(tiny_spec(), init_seed=5)
    c = Network(tiny_spec(), init_seed=6)
    for pa, pb in zip(a.param_list(), b.param_list()):
        assert_allclose(pa, pb, rtol=0, atol=0)
    assert any(np.abs(pa - pc).max() > 0 for pa, pc in zip(a.param_list(), c.param_list()))


def test_whole_network_gradients_match_finite_differences():
    """End-to-end check through conv/pool/dense/dropout with pinned masks."""
    spec = tiny_spec()
    net = Network(spec, init_seed=3, dtype=np.float64)
    rng = np.random.default_rng(7)
    net.set_dropout_rng(rng)
    x = rng.standard_normal((4, 1, 10, 10))
    y = rng.integers(0, 3, size=4)

    # one training pass to learn the mask shapes, then pin the masks
    net.forward(x, train=True)
    for layer in net.layers:
        if isinstance(layer, Dropout):
            layer.fixed_mask = rng.random(layer._mask.shape) >= layer.p

    def loss():
        logits = net.forward(x, train=True)
        return softmax_xent_batch(logits, y)[1]

    base_logits = net.forward(x, train=True)
    _, _, dlogits = softmax_xent_batch(base_logits, y)
    net.backward(dlogits)
    analytic = [g.copy() for g in net.grad_list()]

    def central(p, idx, eps):
        orig = p[idx]
        p[idx] = orig + eps
        hi = loss()
        p[idx] = orig - eps
        lo = loss()
        p[idx] = orig
        return (hi - lo) / (2 * eps)

    for p, g in zip(net.param_list(), analytic):
        scale = max(np.abs(g).max(), 1e-12)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            err = abs(central(p, idx, 1e-6) - g[idx]) / scale
            if err >= 1e-4:
                # a ReLU kink or pool-argmax flip inside the probe window
                # makes the wide difference invalid; a narrower one must agree
                err = abs(central(p, idx, 1e-7) - g[idx]) / scale
            assert err < 1e-4, "gradient mismatch at %s of tensor %s" % (idx, p.shape)


def test_predict_batches_agree():
    net = Network(tiny_spec(), init_seed=2)
    x = np.random.default_rng(4).standard_normal((7, 1, 10, 10)).astype(np.float32)
    assert_allclose(net.predict(x, batch_size=3), net.predict(x, batch_size=7))


def test_checkpoint_roundtrip(tmp_path):
    spec = NetworkSpec(n_classes=4)
    net = Network(spec, init_seed=9)
    ckpt = Checkpoint(spec=spec, params=[p.copy() for p in net.param_list()],
                      epoch=12, seeds=(9, 2, 5))
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    assert back.spec == spec
    assert back.epoch == 12
    assert back.seeds == (9, 2, 5)
    assert len(back.params) == 18
    for a, b in zip(ckpt.params, back.params):
        assert_allclose(a, b, rtol=0, atol=0)


def test_checkpoint_to_network_runs(tmp_path):
    spec = NetworkSpec(n_classes=3)
    net = Network(spec, init_seed=0)
    ckpt = Checkpoint(spec=spec, params=[p.copy() for p in net.param_list()])
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, ckpt)
    x = np.random.default_rng(0).standard_normal((2, 1, 204, 204)).astype(np.float32)
    assert_allclose(load_checkpoint(path).to_network().forward(x), net.forward(x))


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 100)
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_checkpoint_rejects_truncated(tmp_path):
    spec = NetworkSpec(n_classes=3)
    net = Network(spec, init_seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, Checkpoint(spec=spec, params=[p.copy() for p in net.param_list()]))
    raw = path.read_bytes()
    path.write_bytes(raw[:-20])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_checkpoint_rejects_nondefault_layout(tmp_path):
    spec = tiny_spec()
    net = Network(spec, init_seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, Checkpoint(spec=spec, params=[p.copy() for p in net.param_list()]))
    with pytest.raises(CheckpointFormatError, match="digest"):
        load_checkpoint(path)


def test_load_params_validates():
    net = Network(tiny_spec(), init_seed=0)
    good = [p.copy() for p in net.param_list()]
    with pytest.raises(ValueError):
        net.load_params(good[:-1])
    bad = [p.copy() for p in net.param_list()]
    bad[0] = np.zeros((1, 1, 3, 3), dtype=np.float32)
    with pytest.raises(ValueError):
        net.load_params(bad)


def test_spec_digest_sensitivity():
    a = NetworkSpec(n_classes=5)
    assert a.digest() == NetworkSpec(n_classes=5).digest()
    assert a.digest() != NetworkSpec(n_classes=6).digest()
    assert a.digest() != NetworkSpec(n_classes=5, dropout_p=0.5).digest()
