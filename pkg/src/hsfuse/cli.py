"""Command-line front end.

Subcommands: ``simulate`` (degrade a truth cube into the observation pair),
``fuse`` (reconstruct, with fixed or automatically selected mu), ``sweep``
(trace the response curve over a mu grid), ``eval`` (quality metrics against
a truth cube). Verbosity is controlled by the HSFUSE_LOG environment
variable (debug/info/warning/error). All artifacts are deterministic for
fixed inputs and seed.

Heavy imports happen inside the command handlers so that ``--threads`` can
cap the BLAS/FFT thread pools before numpy is loaded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .errors import FormatError, HsfuseError, ParameterError

log = logging.getLogger("hsfuse.cli")

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


def _setup_logging():
    level = os.environ.get("HSFUSE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _cap_threads(n: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def _atomic_bytes(path: str, payload: bytes):
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _write_json(path: str, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    _atomic_bytes(path, text.encode())
    json.loads(open(path).read())


def _write_cube_atomic(cube, path: str):
    from .cube import read_cube, write_cube
    tmp = path + ".tmp"
    write_cube(cube, tmp)
    os.replace(tmp, path)
    if read_cube(path).shape != cube.shape:
        raise HsfuseError(f"verification re-read of {path} failed")


def _builtin_srf_path() -> str:
    from importlib import resources
    return str(resources.files("hsfuse") / "assets" / "srf_rgb31.csv")


def _load_srf(arg, bands: int):
    from .degradation import load_srf_csv
    if arg is not None:
        srf = load_srf_csv(arg)
        source = str(arg)
    elif bands == 31:
        srf = load_srf_csv(_builtin_srf_path())
        source = "builtin:rgb31"
    else:
        raise ParameterError(
            f"--srf is required for a {bands}-band cube (the builtin response "
            "covers 31 bands)")
    return srf, source


def _build_blur(kind: str, size, sigma, scale: int):
    from .degradation import BlurSpec
    if kind == "delta":
        return BlurSpec.delta(), None, None
    if kind == "uniform":
        size = int(size) if size is not None else int(scale)
        return BlurSpec.uniform(size), size, None
    if kind == "gaussian":
        size = int(size) if size is not None else 8
        sigma = float(sigma) if sigma is not None else 3.0
        return BlurSpec.gaussian(size, sigma), size, sigma
    raise ParameterError(f"unknown blur kind {kind!r}")


def _protocol_phase(kind: str, size, scale: int) -> tuple[int, int]:
    if kind == "uniform" and size == scale:
        p = scale - 1 - scale // 2
        return (p, p)
    return (0, 0)


def _cmd_simulate(args) -> int:
    import numpy as np

    from .cube import read_cube
    from .degradation import Decimation, simulate

    truth = read_cube(args.truth)
    scale = int(args.scale)
    blur, size, sigma = _build_blur(args.blur, args.blur_size, args.sigma, scale)
    phase = _protocol_phase(args.blur, size, scale)
    dec = Decimation(scale, scale, phase)
    dec.check_divides(truth.height, truth.width)
    srf, srf_source = _load_srf(args.srf, truth.bands)

    rng = np.random.default_rng(args.seed)
    t0 = time.monotonic()
    y, z = simulate(truth, blur, dec, srf,
                    snr_db=args.snr, rng=rng if args.snr is not None else None)
    log.info("simulate took %.3f s", time.monotonic() - t0)

    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "blur": {
            "kind": args.blur,
            "size": size,
            "sigma": sigma,
            "anchor": list(blur.anchor),
            "kernel": [[float(v) for v in row] for row in blur.kernel],
        },
        "decimation": {
            "s_row": dec.s_row,
            "s_col": dec.s_col,
            "phase": list(dec.phase),
        },
        "srf": {
            "source": srf_source,
            "weights": [[float(v) for v in row] for row in srf.weights],
            "band_centers": (None if srf.band_centers is None
                             else [float(c) for c in srf.band_centers]),
        },
        "noise_snr_db": args.snr,
        "seed": int(args.seed),
        "truth": str(args.truth),
        "fine_shape": list(truth.shape),
        "coarse_shape": list(y.shape),
        "conventional_shape": list(z.shape),
    }
    _write_cube_atomic(y, os.path.join(args.out, "Y.hsc"))
    _write_cube_atomic(z, os.path.join(args.out, "Z.hsc"))
    _write_json(os.path.join(args.out, MANIFEST_NAME), manifest)
    return 0


def _load_manifest(lr_path: str) -> dict:
    path = os.path.join(os.path.dirname(os.path.abspath(lr_path)), MANIFEST_NAME)
    if not os.path.exists(path):
        raise FormatError(f"no {MANIFEST_NAME} next to {lr_path}; "
                          "fuse/sweep read the degradation from it")
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported manifest schema "
                          f"{manifest.get('schema_version')!r}")
    return manifest


def _problem_from_args(args):
    """Build the FusionProblem shared by fuse and sweep."""
    import numpy as np

    from .cube import read_cube
    from .degradation import BlurSpec, Decimation, Srf
    from .priors import make_prior
    from .sylvester import FusionProblem

    y = read_cube(args.lr)
    z = read_cube(args.hr_rgb)
    manifest = _load_manifest(args.lr)
    mb = manifest["blur"]
    blur = BlurSpec(np.asarray(mb["kernel"]), tuple(mb["anchor"]))
    md = manifest["decimation"]
    dec = Decimation(md["s_row"], md["s_col"], tuple(md["phase"]))
    ms = manifest["srf"]
    srf = Srf(np.asarray(ms["weights"]),
              None if ms.get("band_centers") is None else np.asarray(ms["band_centers"]))
    prior = make_prior(args.prior, y, dec)
    problem = FusionProblem(y, z, blur, dec, srf, prior)
    return problem, manifest


def _mdc_config(args):
    from .regparam import MdcConfig
    return MdcConfig(a=args.mdc_a, b_upper=args.mdc_b, epsilon=args.mdc_eps,
                     apply_alpha_to_result=not args.no_alpha_result)


def _cmd_fuse(args) -> int:
    from .regparam import compute_alpha, estimate_mu
    from .sylvester import FusionSolver, objective_terms, relative_residual
    import math

    problem, _ = _problem_from_args(args)
    report = {
        "schema_version": SCHEMA_VERSION,
        "inputs": {"lr": str(args.lr), "hr_rgb": str(args.hr_rgb)},
        "prior": args.prior,
    }
    t0 = time.monotonic()
    if args.mu == "mdc":
        cfg = _mdc_config(args)
        mu, trace = estimate_mu(problem, cfg)
        report["mu_mode"] = "mdc"
        report["mdc"] = {
            "a": cfg.a, "b": cfg.b_upper, "epsilon": cfg.epsilon,
            "apply_alpha_to_result": cfg.apply_alpha_to_result,
            "trace": [[m, d] for m, d in trace],
        }
    else:
        try:
            mu = float(args.mu)
        except ValueError:
            raise ParameterError(f"--mu must be 'mdc' or a number, got {args.mu!r}")
        report["mu_mode"] = "fixed"
    x = FusionSolver(problem).solve(mu)
    j1, j2 = objective_terms(problem, x)
    log.info("fuse took %.3f s", time.monotonic() - t0)

    report["mu"] = mu
    report["alpha"] = compute_alpha(problem.z.bands, problem.bands,
                                    math.sqrt(problem.dec.factor))
    report["j1"] = j1
    report["j2"] = j2
    report["relative_residual"] = relative_residual(problem, x, mu)

    os.makedirs(args.out, exist_ok=True)
    _write_cube_atomic(x, os.path.join(args.out, "xhat.hsc"))
    _write_json(os.path.join(args.out, "fusion_report.json"), report)
    return 0


def _cmd_sweep(args) -> int:
    import numpy as np

    from .cube import read_cube
    from .regparam import sweep_response_curve

    problem, _ = _problem_from_args(args)
    truth = read_cube(args.truth) if args.truth else None
    if args.grid_n < 1:
        raise ParameterError(f"--grid-n must be >= 1, got {args.grid_n}")
    grid = np.logspace(np.log10(args.grid_lo), np.log10(args.grid_hi),
                       int(args.grid_n))
    t0 = time.monotonic()
    curve, distances = sweep_response_curve(problem, grid, truth=truth)
    log.info("sweep took %.3f s", time.monotonic() - t0)

    os.makedirs(args.out, exist_ok=True)
    with_metrics = truth is not None
    lines = ["mu,j1,j2,distance" + (",rmse,psnr" if with_metrics else "")]
    for i in range(len(curve.mu)):
        row = [repr(curve.mu[i]), repr(curve.j1[i]), repr(curve.j2[i]),
               repr(distances[i])]
        if with_metrics:
            row += [repr(curve.rmse[i]), repr(curve.psnr[i])]
        lines.append(",".join(row))
    _atomic_bytes(os.path.join(args.out, "response_curve.csv"),
                  ("\n".join(lines) + "\n").encode())
    if curve.failures:
        flines = ["mu,error"] + [f"{repr(m)},{msg!r}" for m, msg in curve.failures]
        _atomic_bytes(os.path.join(args.out, "failures.csv"),
                      ("\n".join(flines) + "\n").encode())
        for m, msg in curve.failures:
            log.warning("sweep point mu=%r failed: %s", m, msg)
    return 0


def _cmd_eval(args) -> int:
    from .cube import read_cube
    from .metrics import compute_report

    truth = read_cube(args.truth)
    est = read_cube(args.est)
    report = compute_report(truth, est, args.scale)
    payload = {"schema_version": SCHEMA_VERSION, **report.to_dict()}
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    _write_json(args.out, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsfuse",
        description="Hyperspectral image fusion with closed-form solves")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="degrade a truth cube into (Y, Z)")
    sim.add_argument("--truth", required=True, help="fine-grid truth cube (.hsc)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--blur", choices=["uniform", "gaussian", "delta"],
                     default="uniform")
    sim.add_argument("--blur-size", type=int, default=None,
                     help="kernel side (default: scale for uniform, 8 for gaussian)")
    sim.add_argument("--sigma", type=float, default=None,
                     help="gaussian std dev (default 3)")
    sim.add_argument("--scale", type=int, required=True,
                     help="decimation factor per axis")
    sim.add_argument("--srf", default=None,
                     help="spectral response CSV (default: builtin 3x31)")
    sim.add_argument("--snr", type=float, default=None,
                     help="add Gaussian noise at this SNR (dB) to Y and Z")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=None)
    sim.set_defaults(func=_cmd_simulate)

    fuse = sub.add_parser("fuse", help="reconstruct the fine-grid cube")
    fuse.add_argument("--lr", required=True, help="coarse hyperspectral cube (.hsc)")
    fuse.add_argument("--hr-rgb", required=True, help="fine conventional cube (.hsc)")
    fuse.add_argument("--out", required=True, help="output directory")
    fuse.add_argument("--prior", default="bicubic",
                      help="'bicubic' or 'file:PATH' (default bicubic)")
    fuse.add_argument("--mu", default="mdc",
                      help="'mdc' for automatic selection or a number")
    fuse.add_argument("--mdc-a", type=float, default=1e-8)
    fuse.add_argument("--mdc-b", type=float, default=1.0)
    fuse.add_argument("--mdc-eps", type=float, default=0.01)
    fuse.add_argument("--no-alpha-result", action="store_true",
                      help="report the raw bracket midpoint instead of alpha * midpoint")
    fuse.add_argument("--threads", type=int, default=None)
    fuse.set_defaults(func=_cmd_fuse)

    sweep = sub.add_parser("sweep", help="trace the (J1, J2) response curve")
    sweep.add_argument("--lr", required=True)
    sweep.add_argument("--hr-rgb", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--truth", default=None,
                       help="when given, per-mu rmse/psnr columns are added")
    sweep.add_argument("--prior", default="bicubic")
    sweep.add_argument("--grid-lo", type=float, default=1e-6)
    sweep.add_argument("--grid-hi", type=float, default=1.0)
    sweep.add_argument("--grid-n", type=int, default=50)
    sweep.add_argument("--threads", type=int, default=None)
    sweep.set_defaults(func=_cmd_sweep)

    ev = sub.add_parser("eval", help="metrics of an estimate against truth")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--est", required=True)
    ev.add_argument("--out", required=True, help="metric report JSON path")
    ev.add_argument("--scale", type=float, default=1.0,
                    help="decimation factor used in ergas (default 1)")
    ev.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("hsfuse: error: --threads must be >= 1", file=sys.stderr)
            return 2
        _cap_threads(threads)
    try:
        return args.func(args)
    except HsfuseError as e:
        print(f"hsfuse: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"hsfuse: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
