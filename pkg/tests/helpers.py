"""Shared builders and slow-but-obvious reference implementations.

The reference functions here are deliberately written as nested loops with
modular indexing so they share no code path (FFTs, rolls, vectorized
gathers) with the package they check.
"""

import math

import numpy as np

from hsfuse import BlurSpec, Decimation, FusionProblem, HyperCube, Srf, simulate
from hsfuse.degradation import block_mean_decimation
from hsfuse.priors import make_prior


def random_cube(bands, h, w, seed, lo=0.0, hi=1.0):
    rng = np.random.default_rng(seed)
    return HyperCube(lo + (hi - lo) * rng.random((bands, h, w)))


def smooth_cube(bands, h, w, seed, modes=4, floor=0.1, ceil=0.9, corr=0.06):
    """Band-correlated cube built from a few low-pass random fields."""
    rng = np.random.default_rng(seed)
    fr = np.fft.fftfreq(h)[:, None]
    fc = np.fft.fftfreq(w)[None, :]
    mask = np.exp(-((fr ** 2 + fc ** 2) / (2 * corr ** 2)))
    fields = np.asarray([
        np.fft.ifft2(np.fft.fft2(rng.normal(size=(h, w))) * mask).real
        for _ in range(modes)])
    mix = rng.random((bands, modes)) + 0.2
    x = np.tensordot(mix, fields, axes=(1, 0))
    lo, hi_ = x.min(), x.max()
    return HyperCube(floor + (ceil - floor) * (x - lo) / (hi_ - lo))


def gaussian_srf(out_bands, in_bands, width_scale=1.5):
    """Smooth overlapping response rows centered across the band range."""
    w = np.zeros((out_bands, in_bands))
    centers = np.linspace(0, in_bands - 1, out_bands)
    sig = in_bands / out_bands / width_scale
    for i, c in enumerate(centers):
        w[i] = np.exp(-((np.arange(in_bands) - c) ** 2) / (2 * sig ** 2))
    return Srf(w)


def make_instance(bands=8, srf_bands=3, size=32, scale=4, seed=0, snr=None,
                  blur=None, dec=None, prior_source="bicubic", truth=None):
    """A full fusion problem from a smooth truth cube; returns (problem, truth)."""
    if truth is None:
        truth = smooth_cube(bands, size, size, seed)
    if blur is None:
        blur = BlurSpec.uniform(scale)
        dec = block_mean_decimation(scale) if dec is None else dec
    elif dec is None:
        dec = Decimation(scale, scale)
    srf = gaussian_srf(srf_bands, bands)
    rng = np.random.default_rng(seed + 1000) if snr is not None else None
    y, z = simulate(truth, blur, dec, srf, snr_db=snr, rng=rng)
    if prior_source == "truth":
        prior = truth
    else:
        prior = make_prior(prior_source, y, dec)
    return FusionProblem(y, z, blur, dec, srf, prior), truth


def random_problem(bands, srf_bands, h, w, s_row, s_col, phase, kshape, seed):
    """Small randomized instance for solver-vs-oracle comparisons."""
    rng = np.random.default_rng(seed)
    truth = HyperCube(rng.random((bands, h, w)))
    blur = BlurSpec(rng.random(kshape) + 0.1, (kshape[0] // 2, kshape[1] // 2))
    dec = Decimation(s_row, s_col, phase)
    srf = Srf(rng.random((srf_bands, bands)) + 0.05)
    y, z = simulate(truth, blur, dec, srf)
    prior = HyperCube(rng.random((bands, h, w)))
    return FusionProblem(y, z, blur, dec, srf, prior), truth


def conv2_reference(img, kernel, anchor):
    """Circular convolution by explicit loops with modular indexing."""
    h, w = img.shape
    kh, kw = kernel.shape
    ar, ac = anchor
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(kh):
                for v in range(kw):
                    acc += kernel[u, v] * img[(i - (u - ar)) % h, (j - (v - ac)) % w]
            out[i, j] = acc
    return out


def bicubic_weight_reference(t, a=-0.5):
    t = abs(t)
    if t <= 1.0:
        return (a + 2.0) * t ** 3 - (a + 3.0) * t ** 2 + 1.0
    if t < 2.0:
        return a * t ** 3 - 5.0 * a * t ** 2 + 8.0 * a * t - 4.0 * a
    return 0.0


def bicubic_matrix_reference(n_in, s):
    """Dense 1-d interpolation matrix (n_in*s, n_in), clamp-to-edge."""
    n_out = n_in * s
    m = np.zeros((n_out, n_in))
    for i in range(n_out):
        src = (i + 0.5) / s - 0.5
        i0 = math.floor(src)
        for off in range(-1, 3):
            jj = min(max(i0 + off, 0), n_in - 1)
            m[i, jj] += bicubic_weight_reference(src - (i0 + off))
    return m
