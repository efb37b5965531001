"""Target-image priors for the regularized fusion objective.

The default prior is separable bicubic upsampling of the low-resolution cube
with the Catmull-Rom kernel (a = -0.5), clamp-to-edge handling, and the
half-sample ("align corners false") output grid: output sample i reads the
input at (i + 0.5)/s - 0.5. Any externally produced cube of the right shape
can be used instead.
"""

from __future__ import annotations

import numpy as np

from .cube import HyperCube, read_cube
from .degradation import Decimation
from .errors import ParameterError, PriorShapeError

_A = -0.5


def _kernel(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom weight at distance t >= 0."""
    t = np.abs(t)
    near = ((_A + 2.0) * t - (_A + 3.0)) * t * t + 1.0
    far = ((_A * t - 5.0 * _A) * t + 8.0 * _A) * t - 4.0 * _A
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _axis_taps(n_in: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Clamped source indices (n_out, 4) and weights (n_out, 4) for one axis."""
    n_out = n_in * s
    src = (np.arange(n_out) + 0.5) / s - 0.5
    i0 = np.floor(src).astype(np.int64)
    t = src - i0
    offsets = np.arange(-1, 3)
    idx = i0[:, None] + offsets[None, :]
    dist = t[:, None] - offsets[None, :]
    w = _kernel(dist)
    np.clip(idx, 0, n_in - 1, out=idx)
    return idx, w


def bicubic_upsample(y: HyperCube, s_row: int, s_col: int) -> HyperCube:
    """Upsample every band by integer factors (s_row, s_col)."""
    if s_row < 1 or s_col < 1:
        raise ParameterError(f"upsampling factors must be >= 1, got ({s_row}, {s_col})")
    data = y.data
    if s_row > 1:
        idx, w = _axis_taps(y.height, s_row)
        acc = np.zeros((y.bands, idx.shape[0], data.shape[2]))
        for m in range(4):
            acc += w[None, :, m, None] * data[:, idx[:, m], :]
        data = acc
    if s_col > 1:
        idx, w = _axis_taps(y.width, s_col)
        acc = np.zeros((y.bands, data.shape[1], idx.shape[0]))
        for m in range(4):
            acc += w[None, None, :, m] * data[:, :, idx[:, m]]
        data = acc
    return y.with_data(data)


def make_prior(source: str, y: HyperCube, dec: Decimation) -> HyperCube:
    """Build the fine-grid prior cube for a fusion problem.

    ``source`` is either "bicubic" (upsample y by the decimation factors) or
    "file:PATH" naming a cube whose shape must match the fusion target.
    """
    if source == "bicubic":
        return bicubic_upsample(y, dec.s_row, dec.s_col)
    if source.startswith("file:"):
        path = source[len("file:"):]
        prior = read_cube(path)
        want = (y.bands, y.height * dec.s_row, y.width * dec.s_col)
        if prior.shape != want:
            raise PriorShapeError(
                f"prior cube {path} has shape {prior.shape}, fusion target needs {want}")
        return prior
    raise ParameterError(f"unknown prior source {source!r}; use 'bicubic' or 'file:PATH'")
