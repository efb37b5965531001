"""Hyperspectral image fusion toolkit.

Fuses a low-resolution hyperspectral cube with a high-resolution
conventional image by solving the regularized least-squares normal
equations in closed form, with automatic selection of the regularization
weight by minimum distance to the ideal point of the (J1, J2) trade-off.
"""

from .cube import HyperCube, new_cube, read_cube, write_cube
from .degradation import (BlurSpec, Decimation, Srf, blur_apply,
                          blur_decimate_adjoint, block_mean_decimation,
                          decimate, load_kernel, load_srf_csv, simulate,
                          srf_apply, write_srf_csv)
from .metrics import MetricReport, compute_report, ergas, psnr, rmse, sam
from .priors import bicubic_upsample, make_prior
from .regparam import (MdcConfig, ResponseCurve, compute_alpha, estimate_mu,
                       ideal_point, mdc_distance, sweep_response_curve)
from .sylvester import (FusionProblem, FusionSolver, SolverWorkspace,
                        objective_terms, solve_fuse, solve_fuse_oracle)

__version__ = "0.1.0"

__all__ = [
    "HyperCube", "new_cube", "read_cube", "write_cube",
    "BlurSpec", "Decimation", "Srf", "blur_apply", "blur_decimate_adjoint",
    "block_mean_decimation", "decimate", "load_kernel", "load_srf_csv",
    "simulate", "srf_apply", "write_srf_csv",
    "MetricReport", "compute_report", "ergas", "psnr", "rmse", "sam",
    "bicubic_upsample", "make_prior",
    "MdcConfig", "ResponseCurve", "compute_alpha", "estimate_mu",
    "ideal_point", "mdc_distance", "sweep_response_curve",
    "FusionProblem", "FusionSolver", "SolverWorkspace",
    "objective_terms", "solve_fuse", "solve_fuse_oracle",
    "__version__",
]
