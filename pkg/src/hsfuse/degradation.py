"""Observation model: spatial blur, decimation, spectral response, noise.

The high-resolution cube X is observed twice. A low-resolution hyperspectral
cube Y is produced band by band as circular convolution with a kernel followed
by decimation; a high-resolution conventional image Z is produced pixel by
pixel by mixing bands with a spectral response matrix. Blur is always
periodic (circular) so that it is exactly diagonal in the 2-d DFT basis,
which the closed-form fusion solver relies on.

Conventions pinned here and reused everywhere else:

* a kernel carries an integer anchor (origin); entry (u, v) of the kernel
  weights the sample at displacement (u - anchor_row, v - anchor_col),
* decimation keeps samples at ``phase + k*step`` per axis,
* an s x s uniform kernel anchored at (s//2, s//2) combined with decimation
  at phase s - 1 - s//2 averages disjoint s x s blocks exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cube import HyperCube
from .errors import DimensionError, FormatError, NonFiniteError, ParameterError


def _as_kernel(arr) -> np.ndarray:
    k = np.asarray(arr, dtype=np.float64)
    if k.ndim != 2 or min(k.shape) < 1:
        raise DimensionError(f"kernel must be a non-empty 2-d array, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise NonFiniteError("kernel entries must be finite")
    s = k.sum()
    if abs(s) < 1e-12:
        raise ParameterError("kernel sums to ~0 and cannot be normalized")
    return k / s


@dataclass(frozen=True)
class BlurSpec:
    """A normalized convolution kernel plus its anchor cell.

    The anchor is the kernel cell that lands on the output pixel itself, so a
    1x1 kernel anchored at (0, 0) is the identity. Kernels are normalized to
    sum to 1 at construction.
    """

    kernel: np.ndarray
    anchor: tuple[int, int]
    _eig_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        k = _as_kernel(self.kernel)
        k.flags.writeable = False
        ar, ac = self.anchor
        if not (0 <= ar < k.shape[0] and 0 <= ac < k.shape[1]):
            raise ParameterError(f"anchor {self.anchor} outside kernel of shape {k.shape}")
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "anchor", (int(ar), int(ac)))

    @classmethod
    def delta(cls) -> "BlurSpec":
        return cls(np.ones((1, 1)), (0, 0))

    @classmethod
    def uniform(cls, size: int) -> "BlurSpec":
        if size < 1:
            raise ParameterError(f"uniform kernel size must be >= 1, got {size}")
        k = np.full((size, size), 1.0 / (size * size))
        return cls(k, (size // 2, size // 2))

    @classmethod
    def gaussian(cls, size: int, sigma: float) -> "BlurSpec":
        if size < 1:
            raise ParameterError(f"gaussian kernel size must be >= 1, got {size}")
        if not (sigma > 0):
            raise ParameterError(f"gaussian sigma must be > 0, got {sigma}")
        c = (size - 1) / 2.0
        u = np.arange(size) - c
        g1 = np.exp(-(u ** 2) / (2.0 * sigma ** 2))
        k = np.outer(g1, g1)
        return cls(k, (size // 2, size // 2))

    def eigenvalues_for(self, height: int, width: int) -> np.ndarray:
        """2-d DFT eigenvalues of the circular convolution on an HxW grid.

        Cached per grid size; regenerated from the kernel, never stored.
        """
        key = (int(height), int(width))
        cached = self._eig_cache.get(key)
        if cached is not None:
            return cached
        kh, kw = self.kernel.shape
        ar, ac = self.anchor
        padded = np.zeros((height, width))
        for u in range(kh):
            for v in range(kw):
                padded[(u - ar) % height, (v - ac) % width] += self.kernel[u, v]
        eig = np.fft.fft2(padded)
        eig.flags.writeable = False
        self._eig_cache[key] = eig
        return eig


def load_kernel(path, anchor: tuple[int, int] | None = None) -> BlurSpec:
    """Load a kernel from a plain-text file of space-separated rows.

    The anchor defaults to the centered convention (kh//2, kw//2).
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as e:
                raise FormatError(f"{path}: bad kernel row {line!r}") from e
    if not rows:
        raise FormatError(f"{path}: no kernel rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged kernel rows")
    k = np.asarray(rows)
    if anchor is None:
        anchor = (k.shape[0] // 2, k.shape[1] // 2)
    return BlurSpec(k, anchor)


@dataclass(frozen=True)
class Decimation:
    """Keep every s-th sample per axis, starting at a fixed phase."""

    s_row: int
    s_col: int
    phase: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.s_row < 1 or self.s_col < 1:
            raise ParameterError(f"decimation factors must be >= 1, got "
                                 f"({self.s_row}, {self.s_col})")
        pr, pc = self.phase
        if not (0 <= pr < self.s_row and 0 <= pc < self.s_col):
            raise ParameterError(f"phase {self.phase} outside "
                                 f"({self.s_row}, {self.s_col}) sampling cell")
        object.__setattr__(self, "phase", (int(pr), int(pc)))

    @property
    def factor(self) -> int:
        """Total sample-count ratio between the fine and coarse grids."""
        return self.s_row * self.s_col

    def check_divides(self, height: int, width: int) -> None:
        if height % self.s_row or width % self.s_col:
            raise DimensionError(
                f"grid {height}x{width} not divisible by decimation "
                f"({self.s_row}, {self.s_col})")


def block_mean_decimation(size: int) -> Decimation:
    """The phase at which a centered ``size x size`` uniform blur followed by
    decimation averages disjoint blocks."""
    return Decimation(size, size, (size - 1 - size // 2, size - 1 - size // 2))


def blur_apply(x: HyperCube, blur: BlurSpec) -> HyperCube:
    """Circularly convolve every band with the kernel, via the DFT."""
    eig = blur.eigenvalues_for(x.height, x.width)
    out = np.fft.ifft2(np.fft.fft2(x.data, axes=(1, 2)) * eig, axes=(1, 2)).real
    return x.with_data(out)


def decimate(x: HyperCube, dec: Decimation) -> HyperCube:
    """Keep every (s_row, s_col)-th sample starting at the phase."""
    dec.check_divides(x.height, x.width)
    pr, pc = dec.phase
    return x.with_data(x.data[:, pr::dec.s_row, pc::dec.s_col])


def blur_decimate_adjoint(y: HyperCube, blur: BlurSpec, dec: Decimation,
                          height: int, width: int) -> HyperCube:
    """Adjoint of decimate(blur(.)): zero-fill upsample, then correlate.

    ``height``/``width`` give the fine-grid size to restore.
    """
    dec.check_divides(height, width)
    if (y.height * dec.s_row, y.width * dec.s_col) != (height, width):
        raise DimensionError(
            f"coarse grid {y.height}x{y.width} with factors "
            f"({dec.s_row}, {dec.s_col}) does not restore {height}x{width}")
    pr, pc = dec.phase
    up = np.zeros((y.bands, height, width))
    up[:, pr::dec.s_row, pc::dec.s_col] = y.data
    eig = blur.eigenvalues_for(height, width)
    out = np.fft.ifft2(np.fft.fft2(up, axes=(1, 2)) * np.conj(eig), axes=(1, 2)).real
    return y.with_data(out)


@dataclass(frozen=True)
class Srf:
    """Spectral response: a nonnegative (out_bands, in_bands) mixing matrix.

    Rows are normalized to sum to 1 at construction. ``band_centers`` is
    optional metadata (one center per input band).
    """

    weights: np.ndarray
    band_centers: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or min(w.shape) < 1:
            raise DimensionError(f"response matrix must be 2-d, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("response weights must be finite")
        if np.any(w < 0):
            raise ParameterError("response weights must be nonnegative")
        sums = w.sum(axis=1)
        if np.any(sums <= 0):
            bad = np.nonzero(sums <= 0)[0].tolist()
            raise ParameterError(f"response rows {bad} sum to 0 and cannot be normalized")
        w = w / sums[:, None]
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.band_centers is not None:
            c = np.asarray(self.band_centers, dtype=np.float64)
            if c.shape != (w.shape[1],):
                raise DimensionError(
                    f"band centers length {c.shape} does not match {w.shape[1]} bands")
            c.flags.writeable = False
            object.__setattr__(self, "band_centers", c)

    @property
    def out_bands(self) -> int:
        return self.weights.shape[0]

    @property
    def in_bands(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def identity(cls, bands: int) -> "Srf":
        return cls(np.eye(bands))


def srf_apply(x: HyperCube, srf: Srf) -> HyperCube:
    """Mix bands pixelwise with the response matrix."""
    if srf.in_bands != x.bands:
        raise DimensionError(f"response expects {srf.in_bands} bands, cube has {x.bands}")
    out = np.tensordot(srf.weights, x.data, axes=(1, 0))
    return x.with_data(out)


def srf_adjoint(z: HyperCube, srf: Srf) -> HyperCube:
    """Transpose mixing: lift an out_bands cube back to in_bands."""
    if srf.out_bands != z.bands:
        raise DimensionError(f"response produces {srf.out_bands} bands, cube has {z.bands}")
    out = np.tensordot(srf.weights.T, z.data, axes=(1, 0))
    return z.with_data(out)


def load_srf_csv(path) -> Srf:
    """Load a response matrix from CSV.

    First row: ``band_centers`` followed by one center per input band
    (centers may be omitted). Each following row: the weights of one output
    band, comma-separated, one value per input band.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty response file")
    head = [c.strip() for c in lines[0].split(",")]
    if head[0] != "band_centers":
        raise FormatError(f"{path}: first row must start with 'band_centers', "
                          f"got {head[0]!r}")
    centers = None
    if len(head) > 1:
        try:
            centers = [float(c) for c in head[1:]]
        except ValueError as e:
            raise FormatError(f"{path}: non-numeric band centers") from e
    rows = []
    for ln in lines[1:]:
        try:
            rows.append([float(c) for c in ln.split(",")])
        except ValueError as e:
            raise FormatError(f"{path}: bad weight row {ln!r}") from e
    if not rows:
        raise FormatError(f"{path}: no weight rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged weight rows")
    if centers is not None and len(centers) != width:
        raise FormatError(f"{path}: {len(centers)} band centers for {width} bands")
    return Srf(np.asarray(rows), None if centers is None else np.asarray(centers))


def write_srf_csv(srf: Srf, path) -> None:
    centers = (srf.band_centers if srf.band_centers is not None
               else np.arange(srf.in_bands, dtype=float))
    with open(path, "w") as fh:
        fh.write("band_centers," + ",".join(repr(float(c)) for c in centers) + "\n")
        for row in srf.weights:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def add_noise_for_snr(data: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise at the requested SNR (dB).

    The noise variance is the mean squared signal divided by 10^(snr/10).
    """
    power = float(np.mean(data ** 2))
    if power == 0.0:
        return data.copy()
    sigma = np.sqrt(power / (10.0 ** (snr_db / 10.0)))
    return data + rng.normal(0.0, sigma, size=data.shape)


def simulate(x: HyperCube, blur: BlurSpec, dec: Decimation, srf: Srf,
             snr_db: float | None = None,
             rng: np.random.Generator | None = None) -> tuple[HyperCube, HyperCube]:
    """Produce the observation pair (Y, Z) from a fine-grid cube.

    Y = decimate(blur(x)), Z = srf_apply(x); when ``snr_db`` is given,
    i.i.d. Gaussian noise at that SNR is added to both, drawing Y's noise
    first and then Z's from the same generator.
    """
    y = decimate(blur_apply(x, blur), dec)
    z = srf_apply(x, srf)
    if snr_db is not None:
        if rng is None:
            raise ParameterError("noisy simulation requires an rng")
        y = y.with_data(add_noise_for_snr(y.data, snr_db, rng))
        z = z.with_data(add_noise_for_snr(z.data, snr_db, rng))
    return y, z
