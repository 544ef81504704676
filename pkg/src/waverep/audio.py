"""Decode PCM audio, mix down to mono, and resample.

Supports RIFF/WAVE containers holding little-endian PCM (16- or 24-bit
integer, or 32-bit float).  Integer samples are scaled to [-1, 1] by
2**(bits-1); float samples are clamped to [-1, 1].  Compressed codecs
(ADPCM, mu-law, ...) are rejected.

Resampling is downsample-only: a windowed-sinc polyphase filter with a
Kaiser window (beta 8.6, 64 taps per phase) cut off at 0.45x the target
rate, which keeps aliased energy below roughly -60 dB.
"""

import struct
from dataclasses import dataclass
from math import gcd

import numpy as np

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

KAISER_BETA = 8.6
TAPS_PER_PHASE = 64
CUTOFF_FRACTION = 0.45


class WavFormatError(ValueError):
    """Raised for malformed RIFF/WAVE containers."""


class UnsupportedWavError(WavFormatError):
    """Raised for well-formed files using a codec outside PCM int16/24 or float32."""


class UpsampleUnsupportedError(ValueError):
    """Raised when the requested rate exceeds the input rate."""


@dataclass
class AudioBuffer:
    """Decoded audio: ``samples`` has shape (channels, n), values in [-1, 1].

    ``channels`` may be omitted, in which case it comes from the samples
    array (a 1D array counts as one channel).
    """

    samples: np.ndarray
    sample_rate: int
    channels: int = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.channels is None:
            self.channels = self.samples.shape[0]
        if self.samples.shape[0] != self.channels:
            raise ValueError(
                "samples shape %s does not match %d channels"
                % (self.samples.shape, self.channels)
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.shape[1] / self.sample_rate


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte stream into an AudioBuffer.

    Parameters
    ----------
    data : bytes
        Complete file contents.

    Raises
    ------
    WavFormatError
        Malformed container, or a data chunk shorter than its header claims.
    UnsupportedWavError
        Codec other than PCM 16/24-bit int or 32-bit float.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE stream")

    fmt = None
    pcm = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        body = data[pos : pos + size]
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise WavFormatError(
                    "data chunk truncated: header declares %d bytes, %d present"
                    % (size, len(body))
                )
            pcm = body
        pos += size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if pcm is None:
        raise WavFormatError("missing data chunk")

    tag, channels, rate, _byte_rate, block_align, bits = fmt
    if tag == WAVE_FORMAT_EXTENSIBLE:
        raise UnsupportedWavError("WAVE_FORMAT_EXTENSIBLE is not supported")
    if channels < 1:
        raise WavFormatError("channel count must be positive")

    if tag == WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(pcm[: len(pcm) - len(pcm) % (2 * channels)], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif tag == WAVE_FORMAT_PCM and bits == 24:
        usable = len(pcm) - len(pcm) % (3 * channels)
        b = np.frombuffer(pcm[:usable], dtype=np.uint8).reshape(-1, 3)
        raw = (
            b[:, 0].astype(np.int32)
            | (b[:, 1].astype(np.int32) << 8)
            | (b[:, 2].astype(np.int32) << 16)
        )
        raw = np.where(raw >= 1 << 23, raw - (1 << 24), raw)
        samples = raw.astype(np.float64) / float(1 << 23)
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(pcm[: len(pcm) - len(pcm) % (4 * channels)], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedWavError("unsupported codec: format tag %d, %d bits" % (tag, bits))

    frames = samples.reshape(-1, channels).T  # de-interleave to (channels, n)
    return AudioBuffer(samples=frames, sample_rate=rate, channels=channels)


def encode_wav(buf: AudioBuffer, bits: int = 16) -> bytes:
    """Encode an AudioBuffer as a little-endian PCM WAV byte stream.

    ``bits`` may be 16 (integer PCM) or 32 (IEEE float).
    """
    if bits == 16:
        tag, bwidth = WAVE_FORMAT_PCM, 2
        clipped = np.clip(buf.samples, -1.0, 1.0)
        payload = (
            np.round(clipped * 32767.0).astype("<i2").T.reshape(-1).tobytes()
        )
    elif bits == 32:
        tag, bwidth = WAVE_FORMAT_IEEE_FLOAT, 4
        payload = buf.samples.astype("<f4").T.reshape(-1).tobytes()
    else:
        raise ValueError("bits must be 16 or 32")

    ch = buf.channels
    hdr = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        tag,
        ch,
        buf.sample_rate,
        buf.sample_rate * ch * bwidth,
        ch * bwidth,
        bits,
        b"data",
        len(payload),
    )
    return hdr + payload


def load_wav(path) -> AudioBuffer:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


def save_wav(path, buf: AudioBuffer, bits: int = 16):
    with open(path, "wb") as fh:
        fh.write(encode_wav(buf, bits=bits))


def to_mono(buf: AudioBuffer) -> AudioBuffer:
    """Average across channels.  Mono input is returned unchanged."""
    if buf.channels == 1:
        return buf
    mixed = buf.samples.mean(axis=0, keepdims=True)
    return AudioBuffer(samples=mixed, sample_rate=buf.sample_rate, channels=1)


def _design_lowpass(up: int, down: int, in_rate: int, target_rate: int) -> np.ndarray:
    """Prototype FIR for the polyphase resampler, normalized to unit DC gain."""
    n = TAPS_PER_PHASE * up
    fc = CUTOFF_FRACTION * target_rate / (in_rate * up)  # cycles/sample, upsampled rate
    t = np.arange(n) - (n - 1) / 2.0
    h = 2.0 * fc * np.sinc(2.0 * fc * t) * np.kaiser(n, KAISER_BETA)
    return h / h.sum()


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Downsample a mono buffer to ``target_rate`` Hz.

    The signal is low-pass filtered below the target Nyquist frequency
    before decimation.  Output length is floor(n * target_rate / input_rate).

    Raises
    ------
    UpsampleUnsupportedError
        If ``target_rate`` exceeds the input rate.
    ValueError
        If the buffer is not mono or ``target_rate`` is not positive.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if buf.channels != 1:
        raise ValueError("resample requires mono input; call to_mono first")
    if target_rate > buf.sample_rate:
        raise UpsampleUnsupportedError(
            "cannot resample %d Hz up to %d Hz" % (buf.sample_rate, target_rate)
        )
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate, 1)

    x = buf.samples[0]
    g = gcd(buf.sample_rate, target_rate)
    up, down = target_rate // g, buf.sample_rate // g
    h = _design_lowpass(up, down, buf.sample_rate, target_rate)
    n_taps = TAPS_PER_PHASE
    center = (len(h) - 1) // 2
    out_len = (len(x) * up) // down

    pad = n_taps + 2
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    y = np.empty(out_len)
    offsets = np.arange(n_taps)

    # Polyphase evaluation: output m sits at upsampled index m*down + center;
    # group outputs by phase so each group is one vectorized dot product.
    m = np.arange(out_len)
    u = m * down + center
    phases = u % up
    base = u // up
    for p in np.unique(phases):
        sel = phases == p
        hp = h[p::up][::-1] * up  # reversed taps for this phase, gain-corrected
        idx = (base[sel] + pad)[:, None] + offsets[None, :] - (len(hp) - 1)
        y[sel] = xp[idx] @ hp

    return AudioBuffer(samples=y[None, :], sample_rate=target_rate, channels=1)
