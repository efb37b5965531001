"""Regularization-weight selection: search mechanics, weighting, sweeps."""

import math

import numpy as np
import pytest

from helpers import make_instance
from hsfuse import (FusionSolver, MdcConfig, ResponseCurve, compute_alpha,
                    estimate_mu, mdc_distance, sweep_response_curve)
from hsfuse.errors import ParameterError, SolverFailure
from hsfuse.regparam import IdealPoint, _golden_search, ideal_point


# ---------------------------------------------------------------- alpha

def test_alpha_reference_values():
    assert compute_alpha(3, 31, 4) == pytest.approx((3 / 31) ** 2 + (1 / 16) ** 2,
                                                    rel=1e-15)
    assert compute_alpha(3, 31, 8) == pytest.approx(9 / 961 + 1 / 4096, rel=1e-15)
    assert compute_alpha(4, 128, 8) == pytest.approx((4 / 128) ** 2 + (1 / 64) ** 2,
                                                     rel=1e-15)
    assert compute_alpha(5, 5, 1) == pytest.approx(2.0, rel=1e-15)
    assert compute_alpha(1, 100, 10) == pytest.approx(1e-4 + 1e-4, rel=1e-12)


def test_alpha_validation():
    with pytest.raises(ParameterError):
        compute_alpha(0, 4, 2)
    with pytest.raises(ParameterError):
        compute_alpha(5, 4, 2)
    with pytest.raises(ParameterError):
        compute_alpha(2, 4, 0.5)


def test_mdc_distance_values():
    ideal = IdealPoint(i1=2.0, i2=0.0)
    assert mdc_distance(2.0, 0.0, ideal, 0.5) == 0.0
    assert mdc_distance(3.0, 4.0, ideal, 0.5) == pytest.approx(1.0 + 0.5 * 16.0)
    # Unit displacement along the first axis scores 1 for any weight.
    for alpha in (0.01, 1.0, 7.5):
        assert mdc_distance(ideal.i1 + 1.0, ideal.i2, ideal, alpha) == 1.0
    # Mixed displacement: 2^2 + 0.01 * 3^2 = 4.09.
    assert mdc_distance(ideal.i1 + 2.0, ideal.i2 + 3.0, ideal, 0.01) == \
        pytest.approx(4.09, rel=1e-12)
    with pytest.raises(ParameterError):
        mdc_distance(1.0, 1.0, ideal, 0.0)


def test_ideal_point_vanishes_on_consistent_instance():
    """Noiseless observations generated from the prior itself: both ideal
    coordinates are (numerically) zero."""
    problem, truth = make_instance(bands=3, srf_bands=2, size=8, scale=2,
                                   seed=20, prior_source="truth")
    ip = ideal_point(problem)
    assert abs(ip.i1) < 1e-12
    assert ip.i2 == 0.0


def test_ideal_point_is_low_mu_data_misfit():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=0,
                               snr=40.0)
    cfg = MdcConfig()
    ip = ideal_point(problem, cfg)
    from hsfuse.sylvester import objective_terms, solve_fuse
    j1, _ = objective_terms(problem, solve_fuse(problem, cfg.a))
    assert ip.i1 == pytest.approx(j1, rel=1e-12)
    assert ip.i2 == 0.0


def test_ideal_point_lower_bounds_sampled_j1():
    """i1 never exceeds J1 at any larger mu (J1 grows along the trade-off)."""
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=12,
                               snr=40.0)
    ip = ideal_point(problem)
    curve, _ = sweep_response_curve(problem, np.logspace(-6, 0, 20))
    slack = 1e-9 * max(1.0, max(curve.j1))
    assert all(ip.i1 <= j1 + slack for j1 in curve.j1)


# ---------------------------------------------------------------- search core

def test_golden_search_quadratic_matches_fine_grid():
    target = 0.3137
    d = lambda x: (x - target) ** 2
    a_end, b_end = _golden_search(d, 0.0, 1.0, 1e-4, 0.618)
    assert b_end - a_end < 1e-4
    mid = (a_end + b_end) / 2.0
    grid = np.linspace(0.0, 1.0, 10_000)
    best = grid[np.argmin((grid - target) ** 2)]
    assert abs(mid - best) < 2e-4
    assert abs(mid - target) < 1e-4


def test_golden_search_increasing_converges_to_lower_end():
    a_end, b_end = _golden_search(lambda x: x, 0.0, 1.0, 1e-3, 0.618)
    assert (a_end + b_end) / 2.0 < 1e-3


def test_golden_search_decreasing_converges_to_upper_end():
    a_end, b_end = _golden_search(lambda x: -x, 0.0, 1.0, 1e-3, 0.618)
    assert (a_end + b_end) / 2.0 > 1.0 - 1e-3


def test_golden_search_trace_records_all_probes():
    trace = []
    _golden_search(lambda x: (x - 0.5) ** 2, 0.0, 1.0, 0.01, 0.618, trace)
    # Each iteration probes two points; width 1 shrinks by 0.618 per step.
    iters = math.ceil(math.log(0.01) / math.log(0.618))
    assert len(trace) == 2 * iters
    for mu, dist in trace:
        assert dist == pytest.approx((mu - 0.5) ** 2, rel=1e-12)


def test_golden_search_bracket_always_contains_quadratic_min():
    for target in (0.05, 0.33, 0.71, 0.95):
        a_end, b_end = _golden_search(lambda x: (x - target) ** 2,
                                      0.0, 1.0, 1e-3, 0.618)
        assert a_end - 1e-3 <= target <= b_end + 1e-3


# ---------------------------------------------------------------- estimate_mu

def test_estimate_mu_basic_contract():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=1,
                               snr=40.0)
    mu_star, trace = estimate_mu(problem)
    assert mu_star > 0
    assert trace[0][0] == pytest.approx(MdcConfig().a)
    # Bracket [1e-8, 1] with width target 0.01 needs ceil(log .01/log .618)
    # = 10 iterations -> 1 + 20 trace entries, and never more than 1 + 22.
    assert len(trace) == 21
    assert len(trace) <= 23
    for mu, dist in trace:
        assert mu >= 0 and np.isfinite(dist)


def test_estimate_mu_alpha_toggle_exact_ratio():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=2,
                               snr=40.0)
    with_alpha, t1 = estimate_mu(problem, MdcConfig(apply_alpha_to_result=True))
    without, t2 = estimate_mu(problem, MdcConfig(apply_alpha_to_result=False))
    alpha = compute_alpha(2, 4, 2.0)
    assert with_alpha == pytest.approx(alpha * without, rel=1e-15)
    assert t1 == t2


def test_estimate_mu_deterministic():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=3,
                               snr=35.0)
    r1 = estimate_mu(problem)
    r2 = estimate_mu(problem)
    assert r1[0] == r2[0]
    assert r1[1] == r2[1]


def test_estimate_mu_log_space_runs_and_differs():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=4,
                               snr=40.0)
    lin, _ = estimate_mu(problem, MdcConfig(apply_alpha_to_result=False))
    logm, trace = estimate_mu(problem, MdcConfig(apply_alpha_to_result=False,
                                                 log_space=True, epsilon=0.05))
    assert logm > 0
    assert all(mu > 0 for mu, _ in trace)
    # The log-space midpoint is the geometric bracket center, not the linear one.
    assert logm != lin


def test_estimate_mu_lands_near_distance_argmin_on_grid():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=5,
                               snr=40.0)
    cfg = MdcConfig(apply_alpha_to_result=False)
    mu_star, _ = estimate_mu(problem, cfg)
    grid = np.linspace(cfg.a, cfg.b_upper, 2001)
    _, distances = sweep_response_curve(problem, grid, cfg=cfg)
    best = grid[int(np.argmin(distances))]
    step = grid[1] - grid[0]
    assert abs(mu_star - best) <= cfg.epsilon + step


def test_estimate_mu_analytic_objectives_match_dense_grid(monkeypatch):
    """With stubbed analytic (J1, J2) the full search pipeline lands within
    epsilon + grid spacing of a 10^4-point exhaustive minimization."""
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=30)
    import hsfuse.regparam as rp

    def j_of(mu):
        return float(mu), float(max(0.0, 2.0 - mu))

    class Stub:
        def __init__(self, _problem):
            pass

        def __call__(self, mu):
            return j_of(mu)

    monkeypatch.setattr(rp, "_CachedObjectives", Stub)
    cfg = MdcConfig(apply_alpha_to_result=False)
    mu_star, trace = estimate_mu(problem, cfg)

    alpha = rp._problem_alpha(problem)
    i1 = j_of(cfg.a)[0]
    grid = np.linspace(cfg.a, cfg.b_upper, 10_000)
    d = (grid - i1) ** 2 + alpha * (2.0 - grid) ** 2
    best = grid[int(np.argmin(d))]
    spacing = grid[1] - grid[0]
    assert abs(mu_star - best) <= cfg.epsilon + spacing
    # Closed-form minimum of the quadratic as a second, sharper reference.
    closed = (i1 + 2.0 * alpha) / (1.0 + alpha)
    assert abs(mu_star - closed) <= cfg.epsilon


def test_estimate_mu_wraps_solver_errors():
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=6)

    def boom(self, mu, _band_order=None):
        raise ValueError("injected failure")

    import hsfuse.regparam as rp
    original = rp.FusionSolver.solve
    try:
        rp.FusionSolver.solve = boom
        with pytest.raises(SolverFailure) as exc:
            estimate_mu(problem)
        assert exc.value.mu == pytest.approx(MdcConfig().a)
        assert isinstance(exc.value.cause, ValueError)
    finally:
        rp.FusionSolver.solve = original


# ---------------------------------------------------------------- sweep

def test_sweep_matches_grid_and_monotone_terms():
    problem, truth = make_instance(bands=4, srf_bands=2, size=16, scale=2,
                                   seed=7, snr=40.0)
    grid = np.logspace(-6, 0, 25)
    curve, distances = sweep_response_curve(problem, grid, truth=truth)
    assert curve.mu == tuple(float(m) for m in grid)
    assert len(distances) == len(grid)
    assert curve.failures == ()
    assert len(curve.rmse) == len(grid) and len(curve.psnr) == len(grid)
    j1 = np.asarray(curve.j1)
    j2 = np.asarray(curve.j2)
    assert np.all(np.diff(j1) >= -1e-9 * max(1.0, j1.max()))
    assert np.all(np.diff(j2) <= 1e-9 * max(1.0, j2.max()))
    assert all(d >= 0 for d in distances)


def test_sweep_curve_is_discretely_convex():
    """Chord slopes of j2 against j1 are non-decreasing along the curve."""
    problem, _ = make_instance(bands=4, srf_bands=2, size=16, scale=2, seed=13,
                               snr=40.0)
    curve, _ = sweep_response_curve(problem, np.logspace(-6, 0, 30))
    j1 = np.asarray(curve.j1)
    j2 = np.asarray(curve.j2)
    slopes = []
    for i in range(len(j1) - 1):
        dj1 = j1[i + 1] - j1[i]
        if dj1 <= 1e-12 * max(1.0, j1.max()):
            continue  # indistinguishable abscissae carry no slope information
        slopes.append((j2[i + 1] - j2[i]) / dj1)
    scale = max(abs(s) for s in slopes)
    assert all(b >= a - 1e-6 * scale for a, b in zip(slopes, slopes[1:]))


def test_sweep_without_truth_has_no_quality_columns():
    problem, _ = make_instance(bands=2, srf_bands=1, size=8, scale=2, seed=8)
    curve, _ = sweep_response_curve(problem, [0.01, 0.1, 1.0])
    assert curve.rmse is None and curve.psnr is None


def test_sweep_single_point():
    problem, _ = make_instance(bands=2, srf_bands=1, size=8, scale=2, seed=9)
    curve, distances = sweep_response_curve(problem, [0.05])
    assert curve.mu == (0.05,)
    assert len(distances) == 1


@pytest.mark.parametrize("grid", [[], [0.0, 0.1], [-0.1, 0.1], [0.1, 0.1],
                                  [0.2, 0.1]])
def test_sweep_rejects_bad_grids(grid):
    problem, _ = make_instance(bands=2, srf_bands=1, size=8, scale=2, seed=10)
    with pytest.raises(ParameterError):
        sweep_response_curve(problem, grid)


def test_sweep_collects_per_point_failures():
    problem, _ = make_instance(bands=2, srf_bands=1, size=8, scale=2, seed=11)
    import hsfuse.regparam as rp
    original = rp.FusionSolver.solve

    def flaky(self, mu, _band_order=None):
        if mu == 0.1:
            raise ValueError("injected failure at 0.1")
        return original(self, mu, _band_order=_band_order)

    try:
        rp.FusionSolver.solve = flaky
        curve, distances = sweep_response_curve(problem, [0.01, 0.1, 1.0])
    finally:
        rp.FusionSolver.solve = original
    assert curve.mu == (0.01, 1.0)
    assert len(distances) == 2
    assert len(curve.failures) == 1
    assert curve.failures[0][0] == 0.1
    assert "injected" in curve.failures[0][1]


# ---------------------------------------------------------------- data types

def test_response_curve_validation():
    ResponseCurve(mu=(0.1, 0.2), j1=(1.0, 2.0), j2=(2.0, 1.0))
    with pytest.raises(ParameterError):
        ResponseCurve(mu=(0.2, 0.1), j1=(1.0, 2.0), j2=(2.0, 1.0))
    with pytest.raises(ParameterError):
        ResponseCurve(mu=(0.1, 0.2), j1=(1.0,), j2=(2.0, 1.0))
    with pytest.raises(ParameterError):
        ResponseCurve(mu=(0.1, 0.2), j1=(2.0, 1.0), j2=(2.0, 1.0))
    with pytest.raises(ParameterError):
        ResponseCurve(mu=(0.1, 0.2), j1=(1.0, 2.0), j2=(1.0, 2.0))


def test_mdc_config_validation():
    MdcConfig()
    with pytest.raises(ParameterError):
        MdcConfig(a=0.0)
    with pytest.raises(ParameterError):
        MdcConfig(a=2.0, b_upper=1.0)
    with pytest.raises(ParameterError):
        MdcConfig(epsilon=0.0)
    with pytest.raises(ParameterError):
        MdcConfig(epsilon=2.0)
    with pytest.raises(ParameterError):
        MdcConfig(delta=0.5)
    with pytest.raises(ParameterError):
        MdcConfig(delta=1.0)


def test_solver_failure_carries_mu_and_cause():
    cause = RuntimeError("x")
    err = SolverFailure(0.25, cause)
    assert err.mu == 0.25
    assert err.cause is cause
    assert "0.25" in str(err)
