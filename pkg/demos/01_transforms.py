"""Walk through the three 2D representations on a synthetic signal.

Builds one 41616-sample chunk containing a two-note figure, runs it
through the log filter bank, the linear filter bank, and the random
matrix transform, and prints a crude ASCII rendering of each so the
differences are visible without a plotting stack.

Run:  python demos/01_transforms.py
"""

import numpy as np

from waverep.transforms import TransformSpec, bank_for_spec, transform_chunk

RATE = 8000


def two_note_chunk(spec):
    """440 Hz for the first half, 660 Hz plus a faint octave after."""
    t = np.arange(spec.chunk_len) / spec.sample_rate
    half = spec.chunk_len // 2
    x = np.sin(2 * np.pi * 440.0 * t)
    x[half:] = np.sin(2 * np.pi * 660.0 * t[half:])
    x[half:] += 0.3 * np.sin(2 * np.pi * 1320.0 * t[half:])
    return x


def ascii_render(data, rows=24, cols=68):
    """Downsample a 2D array to a small character raster."""
    shades = " .:-=+*#%@"
    mag = np.abs(data)
    rh, cw = mag.shape[0] // rows, mag.shape[1] // cols
    mag = mag[:rows * rh, :cols * cw]  # crop the remainder
    r = mag.reshape(rows, rh, cols, cw).mean(axis=(1, 3))
    r = np.log1p(r / (r.max() + 1e-12) * 1000.0)
    idx = (r / r.max() * (len(shades) - 1)).astype(int)
    # row 0 is the lowest frequency; print high rows first
    return "\n".join("".join(shades[i] for i in line) for line in idx[::-1])


def main():
    chunk = None
    for kind in ("log_stft", "linear_stft", "rmt"):
        spec = TransformSpec(kind=kind, sample_rate=RATE)
        if chunk is None:
            chunk = two_note_chunk(spec)
        s = transform_chunk(chunk, spec)
        print("=" * 64)
        print("%s: %dx%d, dtype %s" % (kind, *s.data.shape, s.data.dtype))
        if kind != "rmt":
            bank = bank_for_spec(spec)
            print("band %.2f..%.2f Hz%s" % (
                bank.centers[0], bank.centers[-1],
                " (narrowed below the Nyquist margin)" if bank.clamped else ""))
        print(ascii_render(s.data))
    print("=" * 64)
    print("note how the 440->660 step shows as a shifted ridge in both")
    print("filter banks but is spread across every row by the random")
    print("projection, which preserves information, not readability.")


if __name__ == "__main__":
    main()
