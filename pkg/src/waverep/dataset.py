"""Dataset assembly: chunk enumeration, per-class sampling, splits, storage.

Spectrogram file layout (little-endian):

    magic   4 bytes  "SGRM"
    version u32      1
    rows    u32
    cols    u32
    label   u32      0xFFFFFFFF when unlabeled
    kind    u8       0=log_stft 1=linear_stft 2=rmt
    rate    u32      sample rate in Hz
    seed    u64      random-matrix seed, 0 when unused
    data    rows*cols float32, row-major

The manifest is a UTF-8 CSV with header
``path,label,class_name,source_file,chunk_offset``; a sidecar text file
records the transform parameters, seeds, hop, and any Nyquist clamping.
"""

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

from waverep.transforms import KIND_CODES, Spectrogram, TransformSpec

UNLABELED = 0xFFFFFFFF
_HEADER = "<4sIIIIBIQ"
_CODE_KINDS = {v: k for k, v in KIND_CODES.items()}
SILENCE_STD = 1e-12


class DatasetBuildError(RuntimeError):
    """Raised when a class pool is empty or a build step cannot proceed."""


class EmptyPlanError(ValueError):
    """Raised when a track is shorter than one chunk."""


class SpectrogramFormatError(ValueError):
    """Raised for malformed spectrogram files."""


@dataclass
class ChunkPlan:
    """Chunk start offsets for one track; consecutive offsets differ by hop."""

    chunk_len: int
    hop: int
    offsets: np.ndarray


@dataclass
class SplitSpec:
    ratios: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be three positive numbers")
        if abs(sum(self.ratios) - 1.0) > 1e-12:
            raise ValueError("ratios must sum to 1, got %r" % (self.ratios,))


@dataclass
class LabeledSet:
    examples: list
    class_names: list
    per_class_count: int = 0
    sampled_with_replacement: tuple = ()

    def __len__(self):
        return len(self.examples)


def enumerate_chunks(track_len: int, chunk_len: int,
                     overlap_fraction: float) -> ChunkPlan:
    """Offsets 0, hop, 2*hop, ... while a full chunk still fits.

    hop = round((1 - overlap_fraction) * chunk_len), at least 1.
    """
    if not (0 <= overlap_fraction < 1):
        raise ValueError("overlap_fraction must be in [0, 1)")
    if chunk_len > track_len:
        raise EmptyPlanError(
            "track of %d samples shorter than one %d-sample chunk"
            % (track_len, chunk_len)
        )
    hop = max(1, int(round((1.0 - overlap_fraction) * chunk_len)))
    count = (track_len - chunk_len) // hop + 1
    offsets = np.arange(count, dtype=np.int64) * hop
    return ChunkPlan(chunk_len=chunk_len, hop=hop, offsets=offsets)


def sample_indices(pool_sizes: dict, n: int, seed: int) -> dict:
    """Per-class index draws, classes visited in sorted-name order.

    Draws are without replacement when the pool allows, with replacement
    otherwise.  Returns {class_name: (indices, replaced)}.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for name in sorted(pool_sizes):
        size = pool_sizes[name]
        if size < 1:
            raise DatasetBuildError("class %r has an empty chunk pool" % (name,))
        replaced = size < n
        out[name] = (rng.choice(size, size=n, replace=replaced), replaced)
    return out


def sample_per_class(pool: dict, n: int, seed: int) -> LabeledSet:
    """Draw exactly n examples per class from {class_name: [Spectrogram, ...]}.

    Labels are assigned by sorted class-name order.  Classes whose pool was
    smaller than n are drawn with replacement and listed in
    ``sampled_with_replacement``.
    """
    draws = sample_indices({name: len(items) for name, items in pool.items()}, n, seed)
    class_names = sorted(pool)
    examples = []
    replaced_classes = []
    for label, name in enumerate(class_names):
        indices, replaced = draws[name]
        if replaced:
            replaced_classes.append(name)
        for i in indices:
            s = pool[name][int(i)]
            s.label = label
            examples.append(s)
    return LabeledSet(
        examples=examples,
        class_names=class_names,
        per_class_count=n,
        sampled_with_replacement=tuple(replaced_classes),
    )


def shuffle_split(labeled: LabeledSet, spec: SplitSpec):
    """Seed-deterministic joint shuffle, then cut into train/val/test."""
    n = len(labeled)
    if n < 5:
        raise ValueError("need at least 5 examples to split, got %d" % n)
    perm = np.random.default_rng(spec.seed).permutation(n)
    cut1 = int(np.floor(spec.ratios[0] * n))
    cut2 = int(np.floor((spec.ratios[0] + spec.ratios[1]) * n))
    parts = (perm[:cut1], perm[cut1:cut2], perm[cut2:])
    return tuple(
        LabeledSet(
            examples=[labeled.examples[i] for i in part],
            class_names=labeled.class_names,
            per_class_count=labeled.per_class_count,
        )
        for part in parts
    )


def normalize_example(m: np.ndarray):
    """Scale one matrix to zero mean and unit population variance.

    Returns (normalized, silent).  A matrix whose standard deviation is
    below SILENCE_STD comes back as zeros with silent=True.
    """
    m = np.asarray(m)
    x = m.astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix contains non-finite entries")
    std = x.std()
    if std < SILENCE_STD:
        return np.zeros_like(m, dtype=m.dtype), True
    out = (x - x.mean()) / std
    return out.astype(m.dtype), False


def write_spectrogram(s: Spectrogram, sink):
    """Serialize to a path or binary file object."""
    if s.data.dtype != np.float32:
        raise ValueError("spectrogram data must be float32")
    rows, cols = s.data.shape
    label = UNLABELED if s.label is None else int(s.label)
    header = struct.pack(
        _HEADER, b"SGRM", 1, rows, cols, label,
        KIND_CODES[s.spec.kind], s.spec.sample_rate, s.spec.rmt_seed,
    )
    payload = header + s.data.astype("<f4").tobytes()
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(payload)


def read_spectrogram(source) -> Spectrogram:
    """Read a spectrogram file written by :func:`write_spectrogram`.

    The transform parameters are rebuilt from the header (standard band
    limits assumed), so the spec digest survives the round trip; source
    path and chunk offset live in the manifest, not here.
    """
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    hdr_len = struct.calcsize(_HEADER)
    if len(raw) < hdr_len:
        raise SpectrogramFormatError("file shorter than header")
    magic, version, rows, cols, label, kind_code, rate, rmt_seed = struct.unpack_from(
        _HEADER, raw, 0
    )
    if magic != b"SGRM":
        raise SpectrogramFormatError("bad magic %r" % (magic,))
    if version != 1:
        raise SpectrogramFormatError("unsupported version %d" % version)
    if kind_code not in _CODE_KINDS:
        raise SpectrogramFormatError("unknown transform code %d" % kind_code)
    expect = hdr_len + rows * cols * 4
    if len(raw) < expect:
        raise SpectrogramFormatError(
            "payload truncated: header declares %dx%d floats, file has %d bytes"
            % (rows, cols, len(raw) - hdr_len)
        )
    data = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=hdr_len)
    spec = TransformSpec(
        kind=_CODE_KINDS[kind_code], sample_rate=rate,
        frame_len=rows, n_frames=cols, rmt_seed=rmt_seed,
    )
    return Spectrogram(
        data=data.reshape(rows, cols).copy(),
        label=None if label == UNLABELED else label,
        spec=spec,
    )


@dataclass
class ManifestEntry:
    path: str
    label: int
    class_name: str
    source_file: str
    chunk_offset: int


def write_manifest(path, entries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label", "class_name", "source_file", "chunk_offset"])
        for e in entries:
            w.writerow([e.path, e.label, e.class_name, e.source_file, e.chunk_offset])


def read_manifest(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader, None)
            if header != ["path", "label", "class_name", "source_file", "chunk_offset"]:
                raise DatasetBuildError("unrecognized manifest header: %r" % (header,))
            return [
                ManifestEntry(row[0], int(row[1]), row[2], row[3], int(row[4]))
                for row in reader
            ]
        except (csv.Error, IndexError) as exc:
            raise DatasetBuildError("malformed manifest %s: %s" % (path, exc)) from exc


def write_sidecar(path, values: dict):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(values):
            fh.write("%s = %s\n" % (key, values[key]))


def read_sidecar(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def load_labeled(manifest_path) -> LabeledSet:
    """Read back every spectrogram a manifest lists, verifying consistency.

    Paths in the manifest are resolved relative to the manifest's own
    directory.  All files must carry the same transform; stored labels
    must agree with the manifest; labels must be contiguous from 0.
    """
    entries = read_manifest(manifest_path)
    if not entries:
        raise DatasetBuildError("manifest is empty")
    base = os.path.dirname(os.path.abspath(manifest_path))
    by_label = {}
    for e in entries:
        if by_label.setdefault(e.label, e.class_name) != e.class_name:
            raise DatasetBuildError(
                "label %d maps to both %r and %r"
                % (e.label, by_label[e.label], e.class_name)
            )
    if sorted(by_label) != list(range(len(by_label))):
        raise DatasetBuildError("labels are not contiguous from 0")
    class_names = [by_label[i] for i in range(len(by_label))]

    examples = []
    digest = None
    for e in entries:
        s = read_spectrogram(os.path.join(base, e.path))
        if s.label is not None and s.label != e.label:
            raise DatasetBuildError(
                "%s stores label %d, manifest says %d" % (e.path, s.label, e.label)
            )
        s.label = e.label
        s.source, s.offset = e.source_file, e.chunk_offset
        if digest is None:
            digest = s.spec.digest()
        elif s.spec.digest() != digest:
            raise DatasetBuildError(
                "manifest mixes transforms: %s disagrees with earlier files" % e.path
            )
        examples.append(s)
    return LabeledSet(examples=examples, class_names=class_names)


def to_arrays(labeled: LabeledSet, normalize: bool = True):
    """Stack a LabeledSet into network inputs.

    Returns (x, y): x of shape (n, 1, rows, cols) float32, y of shape (n,)
    int64.  Unlabeled examples are rejected.
    """
    if not labeled.examples:
        raise ValueError("empty set")
    xs = np.empty((len(labeled.examples), 1) + labeled.examples[0].data.shape,
                  dtype=np.float32)
    ys = np.empty(len(labeled.examples), dtype=np.int64)
    for i, s in enumerate(labeled.examples):
        if s.label is None:
            raise ValueError("example %d is unlabeled" % i)
        m = s.data
        if normalize:
            m, s.silent = normalize_example(m)
        xs[i, 0] = m
        ys[i] = s.label
    return xs, ys
