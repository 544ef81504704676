"""Test-set scoring, confusion matrices, and training-curve output."""

from dataclasses import dataclass

import numpy as np

from waverep.network import Checkpoint, Network


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (k, k) int64, rows true, cols predicted
    class_names: tuple

    def accuracy(self) -> float:
        total = self.counts.sum()
        if total == 0:
            return 0.0
        return float(np.trace(self.counts) / total)


def evaluate(model, x, y, class_names, batch_size: int = 50):
    """Score examples; returns (accuracy, ConfusionMatrix).

    ``model`` may be a Checkpoint or an already-built Network.
    """
    net = model.to_network() if isinstance(model, Checkpoint) else model
    if not isinstance(net, Network):
        raise TypeError("model must be a Checkpoint or Network")
    k = net.spec.n_classes
    if len(class_names) != k:
        raise ValueError("got %d class names for %d classes" % (len(class_names), k))
    predicted = net.predict(x, batch_size)
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (np.asarray(y, dtype=np.int64), predicted), 1)
    cm = ConfusionMatrix(counts=counts, class_names=tuple(class_names))
    return cm.accuracy(), cm


def write_confusion_csv(cm: ConfusionMatrix, path):
    """Counts as CSV: first row/column carry the class names."""
    with open(path, "w") as fh:
        fh.write("," + ",".join(cm.class_names) + "\n")
        for name, row in zip(cm.class_names, cm.counts):
            fh.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")


def write_confusion_pgm(cm: ConfusionMatrix, path):
    """Counts as a binary 8-bit PGM image, each row scaled to its max."""
    counts = cm.counts.astype(np.float64)
    row_max = counts.max(axis=1, keepdims=True)
    row_max[row_max == 0] = 1.0
    pixels = np.rint(255.0 * counts / row_max).astype(np.uint8)
    k = len(cm.class_names)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (k, k))
        fh.write(pixels.tobytes())


def write_curve_csv(curve, path):
    """Per-epoch errors as CSV with an epoch,train_error,val_error header."""
    with open(path, "w") as fh:
        fh.write("epoch,train_error,val_error\n")
        for epoch, train_err, val_err in curve:
            fh.write("%d,%.6f,%.6f\n" % (epoch, train_err, val_err))


def read_curve_csv(path):
    curve = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "epoch,train_error,val_error":
            raise ValueError("unexpected curve header: %r" % header)
        for line in fh:
            epoch, train_err, val_err = line.strip().split(",")
            curve.append((int(epoch), float(train_err), float(val_err)))
    return curve
