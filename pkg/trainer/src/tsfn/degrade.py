"""Observation synthesis for training pairs.

Training needs (upsampled-coarse, conventional) input pairs generated from
truth patches with the exact same conventions the fusion toolkit applies:
circular (wrap-around) blur anchored the same way, strided decimation with a
phase offset, a row-stochastic spectral mixing matrix, and Catmull-Rom
(a = -0.5) bicubic upsampling on the half-sample output grid with clamped
edges. All constants come from the degradation manifest JSON written next to
the observation cubes — nothing is re-derived here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError, ShapeError

_A = -0.5  # Catmull-Rom


@dataclass(frozen=True)
class DegradationSpec:
    """Degradation constants shared with the fusion toolkit.

    kernel: 2-D blur kernel; anchor: kernel element that lands on the output
    pixel; s_row/s_col/phase: decimation strides and offset; srf: (b, B)
    spectral mixing weights, rows summing to one.
    """

    kernel: np.ndarray
    anchor: tuple[int, int]
    s_row: int
    s_col: int
    phase: tuple[int, int]
    srf: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        r = np.asarray(self.srf, dtype=np.float64)
        if k.ndim != 2:
            raise ShapeError(f"blur kernel must be 2-D, got shape {k.shape}")
        if r.ndim != 2:
            raise ShapeError(f"srf weights must be 2-D, got shape {r.shape}")
        ar, ac = self.anchor
        if not (0 <= ar < k.shape[0] and 0 <= ac < k.shape[1]):
            raise ParameterError(f"anchor {self.anchor} outside kernel "
                                 f"{k.shape}")
        if self.s_row < 1 or self.s_col < 1:
            raise ParameterError(f"decimation factors must be >= 1, got "
                                 f"({self.s_row}, {self.s_col})")
        pr, pc = self.phase
        if not (0 <= pr < self.s_row and 0 <= pc < self.s_col):
            raise ParameterError(f"phase {self.phase} outside strides "
                                 f"({self.s_row}, {self.s_col})")
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "srf", r)

    @property
    def fine_bands(self) -> int:
        return self.srf.shape[1]

    @property
    def aux_bands(self) -> int:
        return self.srf.shape[0]

    @classmethod
    def from_manifest(cls, path) -> "DegradationSpec":
        """Parse the manifest JSON emitted next to simulated observations."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from exc
        try:
            blur = doc["blur"]
            dec = doc["decimation"]
            srf = np.asarray(doc["srf"]["weights"], dtype=np.float64)
            return cls(kernel=np.asarray(blur["kernel"], dtype=np.float64),
                       anchor=(int(blur["anchor"][0]), int(blur["anchor"][1])),
                       s_row=int(dec["s_row"]), s_col=int(dec["s_col"]),
                       phase=(int(dec["phase"][0]), int(dec["phase"][1])),
                       srf=srf)
        except (KeyError, TypeError, IndexError) as exc:
            raise FormatError(f"{path}: missing or malformed field "
                              f"({exc!r})") from exc

    def with_scale(self, s: int) -> "DegradationSpec":
        """Same kernel and mixing weights at a different decimation factor.

        The phase is kept when it fits under the new stride and reset to the
        origin otherwise (mixed-scale training only varies the stride).
        """
        pr, pc = self.phase
        if pr >= s or pc >= s:
            pr = pc = 0
        return DegradationSpec(kernel=self.kernel, anchor=self.anchor,
                               s_row=s, s_col=s, phase=(pr, pc), srf=self.srf)


def blur_circular(x: np.ndarray, kernel: np.ndarray,
                  anchor: tuple[int, int]) -> np.ndarray:
    """Wrap-around blur of every band: out[r, c] sums k[u, v] times
    x[(r - u + anchor_r) mod H, (c - v + anchor_c) mod W]."""
    bands, height, width = x.shape
    kh, kw = kernel.shape
    ar, ac = anchor
    padded = np.zeros((height, width))
    for u in range(kh):
        for v in range(kw):
            padded[(u - ar) % height, (v - ac) % width] += kernel[u, v]
    eig = np.fft.fft2(padded)
    return np.fft.ifft2(np.fft.fft2(x, axes=(1, 2)) * eig, axes=(1, 2)).real


def decimate(x: np.ndarray, s_row: int, s_col: int,
             phase: tuple[int, int]) -> np.ndarray:
    """Keep every (s_row, s_col)-th pixel starting at the phase offset."""
    _, height, width = x.shape
    if height % s_row or width % s_col:
        raise ShapeError(f"grid {height}x{width} not divisible by "
                         f"({s_row}, {s_col})")
    return x[:, phase[0]::s_row, phase[1]::s_col]


def srf_apply(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Mix the band axis through the (b, B) weight matrix."""
    if weights.shape[1] != x.shape[0]:
        raise ShapeError(f"srf expects {weights.shape[1]} bands, cube has "
                         f"{x.shape[0]}")
    return np.tensordot(weights, x, axes=(1, 0))


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    near = ((_A + 2.0) * t - (_A + 3.0)) * t * t + 1.0
    far = ((_A * t - 5.0 * _A) * t + 8.0 * _A) * t - 4.0 * _A
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def upsample_matrix(n_in: int, s: int) -> np.ndarray:
    """Dense (n_in * s, n_in) one-axis interpolation operator.

    Output sample o reads the input at (o + 0.5)/s - 0.5 through the four
    Catmull-Rom taps, with out-of-range taps clamped to the edge samples.
    """
    if s < 1:
        raise ParameterError(f"upsampling factor must be >= 1, got {s}")
    n_out = n_in * s
    src = (np.arange(n_out) + 0.5) / s - 0.5
    i0 = np.floor(src).astype(np.int64)
    t = src - i0
    mat = np.zeros((n_out, n_in))
    for m, off in enumerate(range(-1, 3)):
        idx = np.clip(i0 + off, 0, n_in - 1)
        np.add.at(mat, (np.arange(n_out), idx), _catmull_rom(t - off))
    return mat


def bicubic_upsample(y: np.ndarray, s_row: int, s_col: int) -> np.ndarray:
    """Upsample every band by integer factors per axis."""
    out = y
    if s_row > 1:
        out = np.einsum("oh,bhw->bow", upsample_matrix(y.shape[1], s_row), out)
    if s_col > 1:
        out = np.einsum("ow,bhw->bho", upsample_matrix(y.shape[2], s_col), out)
    return np.ascontiguousarray(out)


def synthesize_pair(truth: np.ndarray,
                    spec: DegradationSpec) -> tuple[np.ndarray, np.ndarray]:
    """(Y_up, Z) for a truth patch: blur + decimate + re-upsample, and the
    spectrally mixed full-resolution image."""
    if truth.shape[0] != spec.fine_bands:
        raise ShapeError(f"truth has {truth.shape[0]} bands, spec expects "
                         f"{spec.fine_bands}")
    y = decimate(blur_circular(truth, spec.kernel, spec.anchor),
                 spec.s_row, spec.s_col, spec.phase)
    y_up = bicubic_upsample(y, spec.s_row, spec.s_col)
    z = srf_apply(truth, spec.srf)
    return y_up, z
