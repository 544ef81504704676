"""Command-line front end.

Subcommands:

    waverep build    audio directory -> spectrogram files + manifest
    waverep train    manifest -> checkpoint + training curve
    waverep eval     manifest + checkpoint -> accuracy, confusion outputs
    waverep inspect  describe a spectrogram, checkpoint, or manifest file

``build`` expects one subdirectory per class under the audio directory
and holds the decoded corpus in memory while it samples, so it is meant
for corpora up to a few GB.
"""

import argparse
import os
import sys

import numpy as np

from waverep import dataset, transforms
from waverep.audio import UpsampleUnsupportedError, load_wav, resample, to_mono
from waverep.evaluate import evaluate, write_confusion_csv, write_confusion_pgm, write_curve_csv
from waverep.network import CheckpointFormatError, NetworkSpec, load_checkpoint, save_checkpoint
from waverep.training import TrainConfig, train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waverep",
        description="2D audio representations and a convolutional classifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="sample chunks from audio and write spectrograms")
    b.add_argument("audio_dir", help="directory with one subdirectory per class")
    b.add_argument("out_dir", help="where spectrograms and the manifest go")
    b.add_argument("--transform", required=True, choices=sorted(transforms.KIND_CODES))
    b.add_argument("--rate", type=int, default=8000, help="working sample rate (default 8000)")
    b.add_argument("--per-class", type=int, required=True, help="chunks sampled per class")
    b.add_argument("--overlap", type=float, default=0.8, help="chunk overlap fraction (default 0.8)")
    b.add_argument("--seed", type=int, default=0, help="chunk sampling seed")
    b.add_argument("--rmt-seed", type=int, default=0, help="random projection matrix seed")

    t = sub.add_parser("train", help="fit the network on a built dataset")
    t.add_argument("manifest", help="manifest.csv from a build run")
    t.add_argument("--checkpoint", required=True, help="output checkpoint path")
    t.add_argument("--curve", help="optional per-epoch error CSV")
    t.add_argument("--epochs", type=int, default=150)
    t.add_argument("--batch", type=int, default=50)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--dropout", type=float, default=0.3)
    t.add_argument("--init-seed", type=int, default=0)
    t.add_argument("--shuffle-seed", type=int, default=0)
    t.add_argument("--dropout-seed", type=int, default=0)
    t.add_argument("--split-seed", type=int, default=0)
    t.add_argument("--stop-val-error", type=float, default=None,
                   help="stop once validation error reaches this level")

    e = sub.add_parser("eval", help="score a checkpoint on one split")
    e.add_argument("manifest", help="manifest.csv from a build run")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--split", choices=("train", "val", "test"), default="test")
    e.add_argument("--split-seed", type=int, default=0,
                   help="must match the seed used for training")
    e.add_argument("--confusion", help="write the confusion matrix as CSV here")
    e.add_argument("--image", help="write the confusion matrix as a PGM image here")

    i = sub.add_parser("inspect", help="describe a file produced by this tool")
    i.add_argument("file")
    return parser


def _fail(message: str) -> int:
    print("error: %s" % message, file=sys.stderr)
    return 1


def _list_classes(audio_dir):
    names = sorted(
        d for d in os.listdir(audio_dir)
        if os.path.isdir(os.path.join(audio_dir, d))
    )
    if not names:
        raise dataset.DatasetBuildError("no class subdirectories in %s" % audio_dir)
    return names


def cmd_build(args) -> int:
    spec = transforms.TransformSpec(
        kind=args.transform, sample_rate=args.rate, rmt_seed=args.rmt_seed
    )
    class_names = _list_classes(args.audio_dir)
    os.makedirs(args.out_dir, exist_ok=True)

    # pass 1: decode, resample, and enumerate every chunk position
    audio = {}
    pools = {}
    for name in class_names:
        sub = os.path.join(args.audio_dir, name)
        wavs = sorted(f for f in os.listdir(sub) if f.lower().endswith(".wav"))
        if not wavs:
            return _fail("class %r has no .wav files" % name)
        pool = []
        for fname in wavs:
            rel = os.path.join(name, fname)
            buf = resample(to_mono(load_wav(os.path.join(sub, fname))), args.rate)
            track = buf.samples[0]
            audio[rel] = track
            try:
                plan = dataset.enumerate_chunks(len(track), spec.chunk_len, args.overlap)
            except dataset.EmptyPlanError:
                print("warning: %s shorter than one chunk, skipped" % rel, file=sys.stderr)
                continue
            pool.extend((rel, int(off)) for off in plan.offsets)
        pools[name] = pool

    draws = dataset.sample_indices(
        {name: len(pool) for name, pool in pools.items()}, args.per_class, args.seed
    )

    # pass 2: transform only the sampled chunks
    entries = []
    replaced = []
    for label, name in enumerate(class_names):
        indices, with_replacement = draws[name]
        if with_replacement:
            replaced.append(name)
        for j, pool_idx in enumerate(indices):
            rel, offset = pools[name][int(pool_idx)]
            chunk = audio[rel][offset:offset + spec.chunk_len]
            s = transforms.transform_chunk(chunk, spec, label=label,
                                           source=rel, offset=offset)
            out_name = "%s_%05d.sgm" % (name, j)
            dataset.write_spectrogram(s, os.path.join(args.out_dir, out_name))
            entries.append(dataset.ManifestEntry(
                path=out_name, label=label, class_name=name,
                source_file=rel, chunk_offset=offset,
            ))

    dataset.write_manifest(os.path.join(args.out_dir, "manifest.csv"), entries)
    hop = max(1, int(round((1.0 - args.overlap) * spec.chunk_len)))
    meta = {
        "transform": spec.kind,
        "sample_rate": spec.sample_rate,
        "frame_len": spec.frame_len,
        "n_frames": spec.n_frames,
        "chunk_len": spec.chunk_len,
        "overlap": args.overlap,
        "hop": hop,
        "per_class": args.per_class,
        "seed": args.seed,
        "rmt_seed": args.rmt_seed,
        "classes": ",".join(class_names),
        "sampled_with_replacement": ",".join(replaced),
        "digest": spec.digest().hex(),
    }
    if spec.kind in ("log_stft", "linear_stft"):
        bank = transforms.bank_for_spec(spec)
        meta["f_min"] = "%.9g" % bank.centers[0]
        meta["f_max"] = "%.9g" % bank.centers[-1]
        meta["band_clamped"] = int(bank.clamped)
    dataset.write_sidecar(os.path.join(args.out_dir, "manifest.meta"), meta)
    print("wrote %d spectrograms for %d classes to %s"
          % (len(entries), len(class_names), args.out_dir))
    if replaced:
        print("note: sampled with replacement for: %s" % ", ".join(replaced))
    return 0


def cmd_train(args) -> int:
    labeled = dataset.load_labeled(args.manifest)
    train_set, val_set, _ = dataset.shuffle_split(
        labeled, dataset.SplitSpec(seed=args.split_seed)
    )
    x_train, y_train = dataset.to_arrays(train_set)
    x_val, y_val = dataset.to_arrays(val_set)
    spec = NetworkSpec(n_classes=len(labeled.class_names))
    cfg = TrainConfig(
        batch_size=args.batch, epochs=args.epochs, learning_rate=args.lr,
        momentum=args.momentum, dropout_p=args.dropout,
        init_seed=args.init_seed, shuffle_seed=args.shuffle_seed,
        dropout_seed=args.dropout_seed, stop_val_error=args.stop_val_error,
    )
    ckpt, curve = train(x_train, y_train, x_val, y_val, spec, cfg)
    save_checkpoint(args.checkpoint, ckpt)
    if args.curve:
        write_curve_csv(curve, args.curve)
    best = min(curve, key=lambda row: row[2])
    print("trained %d epochs on %d examples; best val error %.4f at epoch %d"
          % (len(curve), len(x_train), best[2], ckpt.epoch))
    print("checkpoint written to %s" % args.checkpoint)
    return 0


def cmd_eval(args, parser) -> int:
    if not os.path.exists(args.checkpoint):
        print("error: checkpoint %s does not exist" % args.checkpoint, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    ckpt = load_checkpoint(args.checkpoint)
    labeled = dataset.load_labeled(args.manifest)
    if len(labeled.class_names) != ckpt.spec.n_classes:
        return _fail(
            "checkpoint expects %d classes, manifest has %d"
            % (ckpt.spec.n_classes, len(labeled.class_names))
        )
    parts = dataset.shuffle_split(labeled, dataset.SplitSpec(seed=args.split_seed))
    part = dict(zip(("train", "val", "test"), parts))[args.split]
    x, y = dataset.to_arrays(part)
    accuracy, cm = evaluate(ckpt, x, y, labeled.class_names)
    correct = int(np.trace(cm.counts))
    print("%s accuracy: %.4f (%d/%d)" % (args.split, accuracy, correct, len(y)))
    if args.confusion:
        write_confusion_csv(cm, args.confusion)
    if args.image:
        write_confusion_pgm(cm, args.image)
    return 0


def cmd_inspect(args) -> int:
    path = args.file
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"SGRM":
        s = dataset.read_spectrogram(path)
        print("spectrogram %dx%d" % s.data.shape)
        print("transform: %s at %d Hz" % (s.spec.kind, s.spec.sample_rate))
        if s.spec.kind == "rmt":
            print("matrix seed: %d" % s.spec.rmt_seed)
        print("label: %s" % ("none" if s.label is None else s.label))
        print("digest: %s" % s.spec.digest().hex())
    elif magic == b"WREP":
        ckpt = load_checkpoint(path)
        n_params = sum(p.size for p in ckpt.params)
        print("checkpoint for %d classes" % ckpt.spec.n_classes)
        print("tensors: %d (%d parameters)" % (len(ckpt.params), n_params))
        print("epoch: %d" % ckpt.epoch)
        print("seeds: init=%d shuffle=%d dropout=%d" % ckpt.seeds)
    else:
        try:
            entries = dataset.read_manifest(path)
        except (UnicodeDecodeError, dataset.DatasetBuildError):
            return _fail("unrecognized file %s" % path)
        counts = {}
        for e in entries:
            counts[e.class_name] = counts.get(e.class_name, 0) + 1
        print("manifest with %d entries, %d classes" % (len(entries), len(counts)))
        for name in sorted(counts):
            print("  %s: %d" % (name, counts[name]))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args, parser)
        return cmd_inspect(args)
    except (dataset.DatasetBuildError, dataset.SpectrogramFormatError,
            CheckpointFormatError, UpsampleUnsupportedError,
            FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
