"""Closed-form solver for the regularized fusion normal equations.

Stationarity of

    J(X) = ||Y - dec(blur(X))||_F^2 + ||Z - R X||_F^2 + mu ||X - Xt||_F^2

in the band-major matrix view (bands x pixels) is a Sylvester equation

    C1 X + X C2 = C3,
    C1 = R^T R + mu I,   C2 = (BS)(BS)^T,   C3 = R^T Z + Y (BS)^T + mu Xt,

where B is the circular blur and S the decimation. Because B is diagonal in
the 2-d DFT basis and decimation folds frequencies onto the coarse grid in
blocks, the equation decouples: after an eigendecomposition of C1 across
bands and a DFT across pixels, each band reduces to a rank-n correction of a
diagonal solve on the coarse frequency grid, one reciprocal per coarse bin.
The whole solve costs a few FFTs per band.

``solve_fuse_oracle`` builds the same equation densely and solves the
Kronecker-vectorized linear system; it exists to adjudicate the fast path on
small problems and is capped accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import HyperCube
from .degradation import (BlurSpec, Decimation, Srf, blur_apply,
                          blur_decimate_adjoint, decimate, srf_adjoint,
                          srf_apply)
from .errors import CapacityError, DimensionError, IllPosedError, ParameterError

ORACLE_MAX_UNKNOWNS = 4096


@dataclass(frozen=True)
class FusionProblem:
    """One fusion instance: the two observations, the degradation operators,
    and the fine-grid prior cube the solution is pulled toward."""

    y: HyperCube
    z: HyperCube
    blur: BlurSpec
    dec: Decimation
    srf: Srf
    prior: HyperCube

    def __post_init__(self):
        b_bands, l, w = self.y.shape
        fine_h = l * self.dec.s_row
        fine_w = w * self.dec.s_col
        if self.srf.in_bands != b_bands:
            raise DimensionError(
                f"response expects {self.srf.in_bands} bands, Y has {b_bands}")
        if self.z.bands != self.srf.out_bands:
            raise DimensionError(
                f"Z has {self.z.bands} bands, response produces {self.srf.out_bands}")
        if (self.z.height, self.z.width) != (fine_h, fine_w):
            raise DimensionError(
                f"Z grid {self.z.height}x{self.z.width} does not match fine grid "
                f"{fine_h}x{fine_w}")
        if self.prior.shape != (b_bands, fine_h, fine_w):
            raise DimensionError(
                f"prior shape {self.prior.shape} does not match "
                f"{(b_bands, fine_h, fine_w)}")
        self.dec.check_divides(fine_h, fine_w)

    @property
    def bands(self) -> int:
        return self.y.bands

    @property
    def fine_shape(self) -> tuple[int, int]:
        return (self.z.height, self.z.width)


@dataclass(frozen=True)
class SolverWorkspace:
    """Per-(problem, mu) spectral factors used by the fast solve.

    c1_eigvecs/c1_eigvals diagonalize C1; blur_eigvals are the blur's DFT
    eigenvalues with the decimation-phase ramp folded in; aliased_eig_energy
    is the per-coarse-bin sum of |eigenvalue|^2 over the aliasing blocks.
    """

    mu: float
    c1_eigvecs: np.ndarray
    c1_eigvals: np.ndarray
    blur_eigvals: np.ndarray
    aliased_eig_energy: np.ndarray


def _fold(arr: np.ndarray, s_row: int, s_col: int) -> np.ndarray:
    """Sum the (s_row, s_col) grid of coarse-sized sub-blocks of a fine grid."""
    l = arr.shape[0] // s_row
    w = arr.shape[1] // s_col
    return arr.reshape(s_row, l, s_col, w).sum(axis=(0, 2))


class FusionSolver:
    """Precomputed fast solver for one problem across many mu values.

    Everything except the trivial eigenvalue shift C1(mu) = R^T R + mu I is
    mu-independent, so sweeping mu reuses all FFTs.
    """

    def __init__(self, problem: FusionProblem):
        self.problem = problem
        p = problem
        fine_h, fine_w = p.fine_shape

        rtr = p.srf.weights.T @ p.srf.weights
        lam0, q = np.linalg.eigh(rtr)
        self._lam0 = lam0
        self._q = q

        eig = p.blur.eigenvalues_for(fine_h, fine_w)
        pr, pc = p.dec.phase
        fr = np.arange(fine_h)[:, None] / fine_h
        fc = np.arange(fine_w)[None, :] / fine_w
        ramp = np.exp(2j * np.pi * (pr * fr + pc * fc))
        self._eig_mod = eig * ramp
        self._energy = _fold(np.abs(eig) ** 2, p.dec.s_row, p.dec.s_col)

        c30 = (srf_adjoint(p.z, p.srf).data
               + blur_decimate_adjoint(p.y, p.blur, p.dec, fine_h, fine_w).data)
        self._c30_hat = np.fft.fft2(c30, axes=(1, 2))
        self._prior_hat = np.fft.fft2(p.prior.data, axes=(1, 2))

    def _eigvals_for(self, mu: float) -> np.ndarray:
        if mu < 0 or not np.isfinite(mu):
            raise ParameterError(f"mu must be finite and >= 0, got {mu!r}")
        lam = self._lam0 + mu
        if lam.min() <= 1e-12 * max(lam.max(), 1e-300):
            raise IllPosedError(
                f"C1 is singular at mu={mu!r} (smallest eigenvalue {lam.min():.3e}); "
                "a positive mu or a full-rank response is required")
        return lam

    def workspace(self, mu: float) -> SolverWorkspace:
        return SolverWorkspace(float(mu), self._q, self._eigvals_for(mu),
                               self._eig_mod, self._energy)

    def solve(self, mu: float, _band_order=None) -> HyperCube:
        p = self.problem
        lam = self._eigvals_for(mu)
        d = p.dec.factor
        s_r, s_c = p.dec.s_row, p.dec.s_col

        c3_hat = self._c30_hat + mu * self._prior_hat
        cbar = np.tensordot(self._q.T, c3_hat, axes=(1, 0))

        xbar = np.empty_like(cbar)
        order = range(p.bands) if _band_order is None else _band_order
        for k in order:
            c = cbar[k]
            folded = _fold(c * self._eig_mod, s_r, s_c)
            v = folded / (lam[k] * d + self._energy)
            back = np.conj(self._eig_mod) * np.tile(v, (s_r, s_c))
            xbar[k] = (c - back) / lam[k]

        x_hat = np.tensordot(self._q, xbar, axes=(1, 0))
        x = np.fft.ifft2(x_hat, axes=(1, 2)).real
        return p.prior.with_data(x)


def solve_fuse(problem: FusionProblem, mu: float) -> HyperCube:
    """Solve the fusion normal equations in closed form.

    Requires mu > 0, or mu = 0 with a positive-definite R^T R.
    """
    return FusionSolver(problem).solve(mu)


def _direct_circular_conv(img: np.ndarray, blur: BlurSpec) -> np.ndarray:
    """O(pixels * kernel) circular convolution, deliberately FFT-free."""
    ar, ac = blur.anchor
    out = np.zeros_like(img)
    kh, kw = blur.kernel.shape
    for u in range(kh):
        for v in range(kw):
            out += blur.kernel[u, v] * np.roll(img, (u - ar, v - ac), axis=(0, 1))
    return out


def dense_blur_decimate(problem: FusionProblem) -> np.ndarray:
    """The (pixels_fine, pixels_coarse) matrix of decimate(blur(.)), built by
    pushing basis images through a direct spatial convolution."""
    fine_h, fine_w = problem.fine_shape
    n_fine = fine_h * fine_w
    pr, pc = problem.dec.phase
    cols = []
    for i in range(n_fine):
        e = np.zeros((fine_h, fine_w))
        e[i // fine_w, i % fine_w] = 1.0
        blurred = _direct_circular_conv(e, problem.blur)
        cols.append(blurred[pr::problem.dec.s_row, pc::problem.dec.s_col].ravel())
    return np.asarray(cols)


def solve_fuse_oracle(problem: FusionProblem, mu: float) -> HyperCube:
    """Dense reference solve via Kronecker vectorization.

    Builds C1, C2, C3 explicitly and solves the stacked linear system with a
    column-major vec; limited to bands * fine pixels <= ORACLE_MAX_UNKNOWNS.
    """
    p = problem
    fine_h, fine_w = p.fine_shape
    n_fine = fine_h * fine_w
    n_unknowns = p.bands * n_fine
    if n_unknowns > ORACLE_MAX_UNKNOWNS:
        raise CapacityError(
            f"dense path supports at most {ORACLE_MAX_UNKNOWNS} unknowns, "
            f"instance has {n_unknowns}")
    if mu < 0 or not np.isfinite(mu):
        raise ParameterError(f"mu must be finite and >= 0, got {mu!r}")

    r = p.srf.weights
    bs = dense_blur_decimate(p)
    c1 = r.T @ r + mu * np.eye(p.bands)
    c2 = bs @ bs.T
    c3 = r.T @ p.z.pixels() + p.y.pixels() @ bs.T + mu * p.prior.pixels()

    a = (np.kron(np.eye(n_fine), c1) + np.kron(c2.T, np.eye(p.bands)))
    try:
        vec = np.linalg.solve(a, c3.flatten(order="F"))
    except np.linalg.LinAlgError as e:
        raise IllPosedError(f"dense system is singular at mu={mu!r}") from e
    x = vec.reshape(p.bands, n_fine, order="F").reshape(p.bands, fine_h, fine_w)
    return p.prior.with_data(x)


def objective_terms(problem: FusionProblem, x: HyperCube) -> tuple[float, float]:
    """(data misfit J1, prior misfit J2) of a candidate cube, via the
    forward operators."""
    p = problem
    if x.shape != p.prior.shape:
        raise DimensionError(f"candidate shape {x.shape} does not match "
                             f"{p.prior.shape}")
    y_pred = decimate(blur_apply(x, p.blur), p.dec)
    z_pred = srf_apply(x, p.srf)
    j1 = float(np.sum((p.y.data - y_pred.data) ** 2)
               + np.sum((p.z.data - z_pred.data) ** 2))
    j2 = float(np.sum((x.data - p.prior.data) ** 2))
    return j1, j2


def relative_residual(problem: FusionProblem, x: HyperCube, mu: float) -> float:
    """||C1 X + X C2 - C3||_F / ||C3||_F using operator applications only."""
    p = problem
    fine_h, fine_w = p.fine_shape
    x2 = x.pixels()
    rtr = p.srf.weights.T @ p.srf.weights
    c1x = rtr @ x2 + mu * x2
    xc2 = blur_decimate_adjoint(decimate(blur_apply(x, p.blur), p.dec),
                                p.blur, p.dec, fine_h, fine_w).pixels()
    c3 = (srf_adjoint(p.z, p.srf).pixels()
          + blur_decimate_adjoint(p.y, p.blur, p.dec, fine_h, fine_w).pixels()
          + mu * p.prior.pixels())
    num = np.linalg.norm(c1x + xc2 - c3)
    den = np.linalg.norm(c3)
    return float(num / den) if den > 0 else float(num)
