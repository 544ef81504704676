import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from waverep.audio import load_wav
from waverep.synth import CLASS_NAMES, synth_track, write_corpus


def test_track_is_deterministic():
    a = synth_track("pulse", 2.0, 8000, seed=[0, 1, 2])
    b = synth_track("pulse", 2.0, 8000, seed=[0, 1, 2])
    assert_allclose(a, b, rtol=0, atol=0)


def test_track_seed_matters():
    a = synth_track("drone", 2.0, 8000, seed=1)
    b = synth_track("drone", 2.0, 8000, seed=2)
    assert np.abs(a - b).max() > 0.01


def test_track_shape_and_range():
    for name in CLASS_NAMES:
        x = synth_track(name, 1.5, 8000, seed=0)
        assert x.shape == (12000,)
        assert np.abs(x).max() == pytest.approx(0.9, rel=1e-6)


def test_classes_sound_different():
    tracks = [synth_track(name, 2.0, 8000, seed=0) for name in CLASS_NAMES]
    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            # crude spectral distance keeps the generators honest
            a = np.abs(np.fft.rfft(tracks[i]))
            b = np.abs(np.fft.rfft(tracks[j]))
            a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
            assert np.dot(a, b) < 0.9


def test_unknown_class_rejected():
    with pytest.raises(ValueError):
        synth_track("kazoo", 1.0, 8000, seed=0)


def test_write_corpus_layout(tmp_path):
    paths = write_corpus(tmp_path, tracks_per_class=2, duration=1.0, seed=3)
    assert len(paths) == 2 * len(CLASS_NAMES)
    for name in CLASS_NAMES:
        sub = tmp_path / name
        wavs = sorted(os.listdir(sub))
        assert wavs == ["%s_00.wav" % name, "%s_01.wav" % name]
        buf = load_wav(sub / wavs[0])
        assert buf.sample_rate == 8000
        assert buf.samples.shape[1] == 8000


def test_write_corpus_deterministic(tmp_path):
    write_corpus(tmp_path / "a", tracks_per_class=1, duration=0.5, seed=5)
    write_corpus(tmp_path / "b", tracks_per_class=1, duration=0.5, seed=5)
    for name in CLASS_NAMES:
        fa = (tmp_path / "a" / name / ("%s_00.wav" % name)).read_bytes()
        fb = (tmp_path / "b" / name / ("%s_00.wav" % name)).read_bytes()
        assert fa == fb
