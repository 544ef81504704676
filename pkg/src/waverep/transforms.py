"""Fixed-length audio chunks to 204x204 matrices.

Three representations share the same frame geometry (non-overlapping
rectangular frames, 204 samples each by default):

* ``log_stft``    -- power of projections onto complex exponentials whose
                     center frequencies are geometrically spaced, roughly a
                     quarter-tone ladder from C0 to F8.
* ``linear_stft`` -- same projections with arithmetically spaced centers.
* ``rmt``         -- signed projection of each frame through one fixed
                     random matrix with iid standard-normal entries.

Center frequencies are evaluated by direct projection (a nonuniform DFT)
rather than FFT-bin interpolation: at 204-sample frames the FFT grid is
39 Hz wide, far coarser than the low end of the log ladder.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

F_MIN_HZ = 16.35      # C0
F_MAX_HZ = 5587.65    # F8
DEFAULT_FRAME_LEN = 204
DEFAULT_N_FRAMES = 204
NYQUIST_MARGIN = 0.95  # banks are clamped to this fraction of the Nyquist rate

KIND_CODES = {"log_stft": 0, "linear_stft": 1, "rmt": 2}


class NyquistError(ValueError):
    """A filter center at or above the Nyquist rate with clamping disabled."""


@dataclass
class FilterBank:
    """Strictly increasing center frequencies, log- or linear-spaced."""

    centers: np.ndarray
    kind: str  # "log" | "linear"
    clamped: bool = False

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)

    def __len__(self):
        return len(self.centers)


def log_centers(f_min: float, f_max: float, count: int) -> FilterBank:
    """Geometric ladder of ``count`` centers from f_min to f_max inclusive."""
    _check_band(f_min, f_max, count)
    k = np.arange(count)
    centers = f_min * (f_max / f_min) ** (k / (count - 1))
    return FilterBank(centers=centers, kind="log")


def linear_centers(f_min: float, f_max: float, count: int) -> FilterBank:
    """Arithmetic ladder of ``count`` centers from f_min to f_max inclusive."""
    _check_band(f_min, f_max, count)
    return FilterBank(centers=np.linspace(f_min, f_max, count), kind="linear")


def _check_band(f_min, f_max, count):
    if not (0 < f_min < f_max):
        raise ValueError("need 0 < f_min < f_max, got %g, %g" % (f_min, f_max))
    if count < 2:
        raise ValueError("count must be >= 2")


@dataclass
class TransformSpec:
    """Everything that determines one transform's output, seed included."""

    kind: str
    sample_rate: int
    frame_len: int = DEFAULT_FRAME_LEN
    n_frames: int = DEFAULT_N_FRAMES
    rmt_seed: int = 0
    f_min: float = F_MIN_HZ
    f_max: float = F_MAX_HZ

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError("unknown transform kind %r" % (self.kind,))
        if self.frame_len < 1 or self.n_frames < 1:
            raise ValueError("frame_len and n_frames must be positive")

    @property
    def chunk_len(self) -> int:
        return self.frame_len * self.n_frames

    def digest(self) -> bytes:
        text = "%s|%d|%d|%d|%d|%.9g|%.9g" % (
            self.kind, self.sample_rate, self.frame_len, self.n_frames,
            self.rmt_seed, self.f_min, self.f_max,
        )
        return hashlib.sha256(text.encode()).digest()


@dataclass
class Spectrogram:
    """One network input: (filters x frames) float32 matrix plus provenance."""

    data: np.ndarray
    label: int | None
    spec: TransformSpec
    source: str = ""
    offset: int = 0
    clamped: bool = False
    silent: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("spectrogram data must be 2D")


def frame_signal(chunk: np.ndarray, frame_len: int, n_frames: int) -> np.ndarray:
    """Slice a chunk into consecutive non-overlapping frames, no taper.

    Returns an array of shape (n_frames, frame_len).
    """
    chunk = np.asarray(chunk, dtype=np.float64).reshape(-1)
    if len(chunk) != frame_len * n_frames:
        raise ValueError(
            "chunk length %d != frame_len %d * n_frames %d"
            % (len(chunk), frame_len, n_frames)
        )
    return chunk.reshape(n_frames, frame_len)


def projection_basis(centers, frame_len: int, sample_rate: float) -> np.ndarray:
    """Complex exponential basis, shape (n_centers, frame_len)."""
    centers = np.asarray(getattr(centers, "centers", centers), dtype=np.float64)
    t = np.arange(frame_len)
    return np.exp(-2j * np.pi * np.outer(centers, t) / sample_rate)


def filterbank_power(frame: np.ndarray, bank, sample_rate: float) -> np.ndarray:
    """Squared magnitude of the frame's projection onto each filter center.

    ``bank`` may be a FilterBank or a plain array of center frequencies.
    Centers at or above the Nyquist rate raise NyquistError; build banks
    through :func:`bank_for_spec` to re-span them below it instead.
    """
    frame = np.asarray(frame, dtype=np.float64).reshape(-1)
    if len(frame) < 1:
        raise ValueError("frame must be non-empty")
    centers = np.asarray(getattr(bank, "centers", bank), dtype=np.float64)
    if np.any(centers >= sample_rate / 2):
        raise NyquistError(
            "filter center %.2f Hz >= Nyquist %.1f Hz; re-span the bank"
            % (centers.max(), sample_rate / 2)
        )
    basis = projection_basis(centers, len(frame), sample_rate)
    return np.abs(basis @ frame) ** 2


def bank_for_spec(spec: TransformSpec) -> FilterBank:
    """Build the bank a stft-kind spec calls for, clamping f_max below Nyquist.

    When f_max reaches NYQUIST_MARGIN * Nyquist the bank is re-spanned from
    f_min to that limit and marked ``clamped``.  With the default band this
    engages at any rate below 11764 Hz, so both the 8 kHz and 2 kHz modes
    run on narrowed ladders (tops at 3800 Hz and 950 Hz).
    """
    limit = NYQUIST_MARGIN * spec.sample_rate / 2
    f_max = min(spec.f_max, limit)
    maker = log_centers if spec.kind == "log_stft" else linear_centers
    bank = maker(spec.f_min, f_max, spec.frame_len)
    bank.clamped = f_max < spec.f_max
    return bank


def make_random_matrix(seed: int, n: int) -> np.ndarray:
    """n x n matrix of iid standard normals from a PCG64 stream.

    The same (seed, n) reproduces the matrix bit for bit.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((n, n))


def rmt_project(frame: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Plain matrix-vector product; the signed result keeps phase information."""
    frame = np.asarray(frame, dtype=np.float64).reshape(-1)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(frame):
        raise ValueError(
            "matrix shape %s incompatible with frame length %d"
            % (matrix.shape, len(frame))
        )
    return matrix @ frame


def transform_chunk(chunk: np.ndarray, spec: TransformSpec,
                    label: int | None = None, source: str = "",
                    offset: int = 0) -> Spectrogram:
    """Apply the spec's transform to one chunk.

    Parameters
    ----------
    chunk : array of spec.frame_len * spec.n_frames samples
    spec : TransformSpec
    label, source, offset : provenance recorded on the Spectrogram

    Returns
    -------
    Spectrogram with data of shape (frame_len, n_frames): rows are filter
    or projection components, columns are time frames.
    """
    frames = frame_signal(chunk, spec.frame_len, spec.n_frames)
    clamped = False
    if spec.kind in ("log_stft", "linear_stft"):
        bank = bank_for_spec(spec)
        clamped = bank.clamped
        basis = projection_basis(bank, spec.frame_len, spec.sample_rate)
        data = np.abs(basis @ frames.T) ** 2
    else:
        matrix = make_random_matrix(spec.rmt_seed, spec.frame_len)
        data = matrix @ frames.T
    return Spectrogram(
        data=data, label=label, spec=spec,
        source=source, offset=offset, clamped=clamped,
    )
