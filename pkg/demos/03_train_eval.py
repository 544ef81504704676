"""Train the classifier on a small synthetic dataset and score it.

Uses the library API directly rather than the CLI: assemble arrays from
a built dataset, fit the network for a few epochs, then evaluate on the
held-out test split and print the confusion matrix.  Scaled down (50
examples, 3 epochs) so it finishes in well under a minute; accuracy is
accordingly modest.

Run:  python demos/03_train_eval.py
"""

import os
import tempfile

import numpy as np

from waverep.cli import main as waverep
from waverep.dataset import SplitSpec, load_labeled, shuffle_split, to_arrays
from waverep.evaluate import evaluate
from waverep.network import NetworkSpec
from waverep.synth import write_corpus
from waverep.training import TrainConfig, train


def run():
    with tempfile.TemporaryDirectory() as scratch:
        audio = os.path.join(scratch, "audio")
        out = os.path.join(scratch, "dataset")
        write_corpus(audio, tracks_per_class=1, duration=60.0, seed=0)
        assert waverep(["build", audio, out, "--transform", "log_stft",
                        "--per-class", "10", "--seed", "1"]) == 0

        labeled = load_labeled(os.path.join(out, "manifest.csv"))
        train_set, val_set, test_set = shuffle_split(labeled, SplitSpec(seed=0))
        x_train, y_train = to_arrays(train_set)
        x_val, y_val = to_arrays(val_set)
        x_test, y_test = to_arrays(test_set)
        print("splits: %d train / %d val / %d test"
              % (len(y_train), len(y_val), len(y_test)))

        spec = NetworkSpec(n_classes=len(labeled.class_names))
        cfg = TrainConfig(epochs=3, batch_size=16)
        ckpt, curve = train(x_train, y_train, x_val, y_val, spec, cfg)
        for epoch, train_err, val_err in curve:
            print("epoch %d: train error %.3f, val error %.3f"
                  % (epoch, train_err, val_err))

        accuracy, cm = evaluate(ckpt, x_test, y_test, labeled.class_names)
        print("\ntest accuracy: %.3f" % accuracy)
        width = max(len(n) for n in cm.class_names)
        print("confusion (rows = true class):")
        for name, row in zip(cm.class_names, cm.counts):
            print("  %-*s %s" % (width, name, " ".join("%3d" % v for v in row)))


if __name__ == "__main__":
    run()
