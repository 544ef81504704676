"""Deterministic synthetic corpus for exercising the full pipeline.

Five audio styles that differ in register, timbre, and pacing, so a
classifier separates them quickly under any of the transforms.  Tracks
are reproducible given (seed, class, track index).
"""

import os

import numpy as np

from waverep.audio import AudioBuffer, save_wav

CLASS_NAMES = ("carillon", "drone", "glide", "noise", "pulse")

_FLOOR = 1e-3  # -60 dB noise floor keeps gaps from being digital silence


def _note_times(rng, duration, rate):
    starts = np.arange(0.0, duration, 1.0 / rate)
    return starts + rng.uniform(-0.02, 0.02, size=len(starts))


def _add_tone(out, t, start, length, freq, partials, sample_rate, decay=None):
    i0 = max(0, int(start * sample_rate))
    i1 = min(len(out), int((start + length) * sample_rate))
    if i1 <= i0:
        return
    seg = t[i0:i1] - t[i0]
    env = np.exp(-seg / decay) if decay else np.minimum(1.0, seg / 0.01)
    for mult, amp in partials:
        out[i0:i1] += amp * env * np.sin(2 * np.pi * freq * mult * seg)


def synth_track(class_name: str, duration: float, sample_rate: int, seed) -> np.ndarray:
    """One mono track of the given style, float64 in [-1, 1]."""
    rng = np.random.default_rng(seed)
    n = int(duration * sample_rate)
    t = np.arange(n) / sample_rate
    out = rng.standard_normal(n) * _FLOOR

    if class_name == "drone":
        # sustained low tones, gentle harmonic rolloff
        notes = (110.0, 123.47, 130.81, 146.83)
        partials = [(k, 1.0 / k) for k in range(1, 7)]
        for start in _note_times(rng, duration, 0.5):
            _add_tone(out, t, start, 2.2, rng.choice(notes) * rng.uniform(0.998, 1.002),
                      partials, sample_rate)
    elif class_name == "pulse":
        # quick plucked notes, odd harmonics only
        notes = (440.0, 493.9, 554.4, 659.3, 740.0)
        partials = [(1, 1.0), (3, 0.6), (5, 0.4), (7, 0.25)]
        for start in _note_times(rng, duration, 4.0):
            _add_tone(out, t, start, 0.25, rng.choice(notes), partials,
                      sample_rate, decay=0.07)
    elif class_name == "glide":
        # continuous frequency sweep between 500 and 1500 Hz
        rate = rng.uniform(0.15, 0.25)
        phase = rng.uniform(0, 2 * np.pi)
        freq = 1000.0 + 500.0 * np.sin(2 * np.pi * rate * t + phase)
        arg = 2 * np.pi * np.cumsum(freq) / sample_rate
        out += np.sin(arg) + 0.3 * np.sin(2 * arg)
    elif class_name == "noise":
        # band-limited noise in 2 Hz bursts
        noise = rng.standard_normal(n)
        spectrum = np.fft.rfft(noise)
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        spectrum[(freqs < 1800.0) | (freqs > 3600.0)] = 0.0
        band = np.fft.irfft(spectrum, n)
        env = np.clip(np.sin(2 * np.pi * 1.0 * t + rng.uniform(0, 2 * np.pi)), 0.0, None)
        out += band / max(np.abs(band).max(), 1e-30) * env
    elif class_name == "carillon":
        # bright bell strikes with inharmonic partials
        notes = (880.0, 1108.7, 1318.5)
        partials = [(1.0, 1.0), (2.76, 0.5), (5.40, 0.25)]
        for start in _note_times(rng, duration, 1.5):
            _add_tone(out, t, start, 0.6, rng.choice(notes), partials,
                      sample_rate, decay=0.15)
    else:
        raise ValueError("unknown class %r" % class_name)

    return out * (0.9 / np.abs(out).max())


def write_corpus(root, tracks_per_class: int = 4, duration: float = 60.0,
                 sample_rate: int = 8000, seed: int = 0) -> list:
    """Write class-per-subdirectory WAV files; returns the paths."""
    paths = []
    for ci, name in enumerate(CLASS_NAMES):
        sub = os.path.join(root, name)
        os.makedirs(sub, exist_ok=True)
        for ti in range(tracks_per_class):
            samples = synth_track(name, duration, sample_rate, seed=[seed, ci, ti])
            path = os.path.join(sub, "%s_%02d.wav" % (name, ti))
            save_wav(path, AudioBuffer(samples, sample_rate))
            paths.append(path)
    return paths
