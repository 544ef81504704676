"""Build a labeled spectrogram dataset from a directory of WAV files.

Synthesizes a small five-class corpus, then runs the same pipeline the
``waverep build`` command uses: decode, resample to the working rate,
enumerate 80%-overlap chunk positions, sample a fixed number per class,
transform, and write spectrogram files plus a manifest.

Run:  python demos/02_build_dataset.py
"""

import os
import tempfile

from waverep.cli import main as waverep
from waverep.dataset import read_manifest, read_sidecar, read_spectrogram
from waverep.synth import write_corpus


def run():
    with tempfile.TemporaryDirectory() as scratch:
        audio = os.path.join(scratch, "audio")
        out = os.path.join(scratch, "dataset")
        print("synthesizing corpus (5 classes, one 30 s track each)...")
        write_corpus(audio, tracks_per_class=1, duration=30.0, seed=0)

        rc = waverep(["build", audio, out, "--transform", "log_stft",
                      "--per-class", "8", "--seed", "1"])
        assert rc == 0

        meta = read_sidecar(os.path.join(out, "manifest.meta"))
        print("\nsidecar metadata:")
        for key in ("transform", "sample_rate", "chunk_len", "hop",
                    "f_min", "f_max", "band_clamped"):
            print("  %-13s %s" % (key, meta[key]))

        entries = read_manifest(os.path.join(out, "manifest.csv"))
        print("\nfirst few manifest rows:")
        for e in entries[:3]:
            print("  %s  label=%d (%s)  from %s @ sample %d"
                  % (e.path, e.label, e.class_name, e.source_file, e.chunk_offset))

        s = read_spectrogram(os.path.join(out, entries[0].path))
        print("\none spectrogram back from disk: %dx%d %s, label %s"
              % (*s.data.shape, s.data.dtype, s.label))


if __name__ == "__main__":
    run()
