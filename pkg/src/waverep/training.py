"""Minibatch SGD with momentum over the conv/dense stack.

The loop shuffles each epoch with its own seeded generator, keeps the
final short batch, and snapshots the parameters whenever validation
error improves; the returned checkpoint is the best-validation state,
not the last one.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from waverep.layers import softmax_xent_batch
from waverep.network import Checkpoint, Network, NetworkSpec


class TrainingDivergedError(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass
class TrainConfig:
    batch_size: int = 50
    epochs: int = 150
    learning_rate: float = 0.01
    momentum: float = 0.9
    dropout_p: float = None  # None keeps the network spec's rate
    init_seed: int = 0
    shuffle_seed: int = 0
    dropout_seed: int = 0
    stop_val_error: float = None  # early-exit threshold, None trains all epochs


def sgd_step(params, grads, velocity, learning_rate, momentum):
    """v <- momentum*v - lr*g; p <- p + v, all in place."""
    for p, g, v in zip(params, grads, velocity):
        v *= momentum
        v -= learning_rate * g
        p += v


def _error_rate(predicted, labels) -> float:
    return float(np.mean(predicted != labels))


def train(x_train, y_train, x_val, y_val, spec: NetworkSpec, cfg: TrainConfig):
    """Fit the network; returns (best checkpoint, per-epoch curve).

    Curve entries are (epoch, train_error, val_error) with 1-based
    epochs.  Train error is measured on the training-mode forward
    passes, validation with dropout off.
    """
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("train and validation sets must be non-empty")
    if cfg.dropout_p is not None:
        spec = dataclasses.replace(spec, dropout_p=cfg.dropout_p)
    net = Network(spec, init_seed=cfg.init_seed)
    net.set_dropout_rng(np.random.default_rng(cfg.dropout_seed))
    shuffle_rng = np.random.default_rng(cfg.shuffle_seed)

    params = net.param_list()
    velocity = [np.zeros_like(p) for p in params]
    best_err = np.inf
    best_params = [p.copy() for p in params]
    best_epoch = 0
    curve = []

    n = len(x_train)
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        wrong = 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            logits = net.forward(xb, train=True)
            probs, loss, dlogits = softmax_xent_batch(logits, yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    "loss became non-finite at epoch %d, batch %d"
                    % (epoch, start // cfg.batch_size)
                )
            wrong += int(np.sum(probs.argmax(axis=1) != yb))
            net.backward(dlogits)
            sgd_step(params, net.grad_list(), velocity,
                     cfg.learning_rate, cfg.momentum)
        train_err = wrong / n
        val_err = _error_rate(net.predict(x_val, cfg.batch_size), y_val)
        curve.append((epoch, train_err, val_err))
        if val_err < best_err:
            best_err = val_err
            best_params = [p.copy() for p in params]
            best_epoch = epoch
        if cfg.stop_val_error is not None and val_err <= cfg.stop_val_error:
            break

    ckpt = Checkpoint(
        spec=spec, params=best_params, epoch=best_epoch,
        seeds=(cfg.init_seed, cfg.shuffle_seed, cfg.dropout_seed),
    )
    return ckpt, curve
