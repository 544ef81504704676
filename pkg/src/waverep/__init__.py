"""waverep: 2D representations of audio and a from-scratch CNN classifier.

The pipeline runs in three stages:

1. ``audio``       -- decode WAV files, mix down to mono, resample.
2. ``transforms``  -- turn fixed-length chunks into 204x204 matrices via a
                      log-spaced filter bank, a linear filter bank, or a
                      random matrix projection.
3. ``dataset`` / ``network`` / ``training`` / ``evaluate`` -- assemble
   labeled datasets, train the convolutional network, and score it.

``waverep.cli`` wires everything into the ``waverep`` command.

Set WAVEREP_THREADS to cap BLAS thread pools; it must take effect here,
before numpy first loads.
"""

import os as _os

_threads = _os.environ.get("WAVEREP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from waverep.audio import AudioBuffer, decode_wav, encode_wav, load_wav, resample, save_wav, to_mono
from waverep.transforms import (
    F_MAX_HZ,
    F_MIN_HZ,
    FilterBank,
    Spectrogram,
    TransformSpec,
    filterbank_power,
    frame_signal,
    linear_centers,
    log_centers,
    make_random_matrix,
    rmt_project,
    transform_chunk,
)
from waverep.dataset import (
    ChunkPlan,
    LabeledSet,
    SplitSpec,
    enumerate_chunks,
    load_labeled,
    normalize_example,
    read_spectrogram,
    sample_per_class,
    shuffle_split,
    write_spectrogram,
)
from waverep.network import Checkpoint, Network, NetworkSpec, load_checkpoint, save_checkpoint
from waverep.training import TrainConfig, TrainingDivergedError, sgd_step, train
from waverep.evaluate import (
    ConfusionMatrix,
    evaluate,
    write_confusion_csv,
    write_confusion_pgm,
    write_curve_csv,
)

__version__ = "0.1.0"
