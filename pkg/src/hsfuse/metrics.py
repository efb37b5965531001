"""Reconstruction quality metrics.

Cubes are compared in their native [0, 1] nominal range; rmse and psnr are
reported on the conventional 255 scale. psnr is the per-band mean with a
300 dB ceiling for exact bands; ergas needs the decimation factor and
per-band truth means; sam is the mean per-pixel spectral angle in degrees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import HyperCube
from .errors import DegenerateBandError, DimensionError, ParameterError, UndefinedMetricError

PSNR_CEILING_DB = 300.0
PEAK = 255.0


def _check_pair(truth: HyperCube, est: HyperCube) -> None:
    if truth.shape != est.shape:
        raise DimensionError(
            f"metric operands differ in shape: {truth.shape} vs {est.shape}")


def rmse(truth: HyperCube, est: HyperCube) -> float:
    """Root mean squared error over all samples, on the 255 scale."""
    _check_pair(truth, est)
    return float(PEAK * np.sqrt(np.mean((truth.data - est.data) ** 2)))


def per_band_psnr(truth: HyperCube, est: HyperCube) -> np.ndarray:
    _check_pair(truth, est)
    diff = PEAK * (truth.data - est.data)
    mse = np.mean(diff ** 2, axis=(1, 2))
    out = np.full(truth.bands, PSNR_CEILING_DB)
    nz = mse > 0
    out[nz] = np.minimum(10.0 * np.log10(PEAK ** 2 / mse[nz]), PSNR_CEILING_DB)
    return out


def psnr(truth: HyperCube, est: HyperCube) -> float:
    """Mean over bands of the per-band peak signal-to-noise ratio, in dB."""
    return float(np.mean(per_band_psnr(truth, est)))


def ergas(truth: HyperCube, est: HyperCube, s: float) -> float:
    """Relative global dimensionless error for decimation factor ``s`` per axis."""
    _check_pair(truth, est)
    if not (s > 0):
        raise ParameterError(f"decimation factor must be > 0, got {s!r}")
    band_rmse = np.sqrt(np.mean((truth.data - est.data) ** 2, axis=(1, 2)))
    band_mean = np.mean(truth.data, axis=(1, 2))
    bad = np.nonzero(band_mean == 0.0)[0]
    if bad.size:
        raise DegenerateBandError(
            f"ergas undefined: truth bands {bad.tolist()} have zero mean",
            bad.tolist())
    return float(100.0 / s * np.sqrt(np.mean((band_rmse / band_mean) ** 2)))


def sam(truth: HyperCube, est: HyperCube) -> float:
    """Mean spectral angle between per-pixel spectra, in degrees.

    Pixels where either spectrum has zero norm are skipped; if no pixel
    remains the metric is undefined.
    """
    _check_pair(truth, est)
    t = truth.pixels()
    e = est.pixels()
    dot = np.sum(t * e, axis=0)
    nt = np.linalg.norm(t, axis=0)
    ne = np.linalg.norm(e, axis=0)
    valid = (nt > 0) & (ne > 0)
    if not np.any(valid):
        raise UndefinedMetricError("sam undefined: every pixel has a zero-norm spectrum")
    cosang = np.clip(dot[valid] / (nt[valid] * ne[valid]), -1.0, 1.0)
    return float(np.degrees(np.mean(np.arccos(cosang))))


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    psnr: float
    ergas: float
    sam: float
    per_band_psnr: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "psnr": self.psnr,
            "ergas": self.ergas,
            "sam": self.sam,
            "per_band_psnr": list(self.per_band_psnr),
        }


def compute_report(truth: HyperCube, est: HyperCube, s: float) -> MetricReport:
    return MetricReport(
        rmse=rmse(truth, est),
        psnr=psnr(truth, est),
        ergas=ergas(truth, est, s),
        sam=sam(truth, est),
        per_band_psnr=tuple(per_band_psnr(truth, est).tolist()),
    )
