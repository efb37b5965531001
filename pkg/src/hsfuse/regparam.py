"""Automatic selection of the regularization weight mu.

The solver traces a Pareto front between the data misfit J1 and the prior
misfit J2 as mu varies. Selection minimizes the squared distance

    D(mu) = (J1(mu) - I1)^2 + alpha (J2(mu) - I2)^2

to the ideal point, where I1 is J1 at a vanishing mu (evaluated at the lower
bracket endpoint), I2 = 0, and alpha = (b/B)^2 + (1/s^2)^2 balances the two
axes by the observation-size ratios. The minimizer is found with a
golden-section search on [a, b]; the returned value is the final bracket
midpoint, scaled by alpha unless configured otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SolverFailure
from .metrics import psnr as psnr_metric
from .metrics import rmse as rmse_metric
from .sylvester import FusionProblem, FusionSolver, objective_terms

log = logging.getLogger(__name__)

GOLDEN = 0.618


@dataclass(frozen=True)
class MdcConfig:
    """Search bracket and stopping width for the distance minimization."""

    a: float = 1e-8
    b_upper: float = 1.0
    epsilon: float = 0.01
    delta: float = GOLDEN
    apply_alpha_to_result: bool = True
    log_space: bool = False

    def __post_init__(self):
        if not (0 < self.a < self.b_upper):
            raise ParameterError(f"need 0 < a < b, got a={self.a!r}, b={self.b_upper!r}")
        if not (0 < self.epsilon < self.b_upper - self.a):
            raise ParameterError(
                f"need 0 < epsilon < b - a, got epsilon={self.epsilon!r}")
        if not (0.5 < self.delta < 1.0):
            raise ParameterError(f"need 0.5 < delta < 1, got {self.delta!r}")


@dataclass(frozen=True)
class IdealPoint:
    i1: float
    i2: float = 0.0


@dataclass(frozen=True)
class ResponseCurve:
    """Objective terms sampled along a strictly increasing mu grid.

    J1 must be non-decreasing and J2 non-increasing along the grid, up to a
    1e-9 relative solver slack; gross violations are rejected.
    """

    mu: tuple[float, ...]
    j1: tuple[float, ...]
    j2: tuple[float, ...]
    rmse: tuple[float, ...] | None = None
    psnr: tuple[float, ...] | None = None
    failures: tuple[tuple[float, str], ...] = ()

    def __post_init__(self):
        mu = np.asarray(self.mu)
        if mu.size and np.any(np.diff(mu) <= 0):
            raise ParameterError("response curve mu values must be strictly increasing")
        j1 = np.asarray(self.j1)
        j2 = np.asarray(self.j2)
        if j1.shape != mu.shape or j2.shape != mu.shape:
            raise ParameterError("response curve arrays must have equal length")
        slack1 = 1e-9 * max(1.0, float(np.max(j1, initial=0.0)))
        slack2 = 1e-9 * max(1.0, float(np.max(j2, initial=0.0)))
        if j1.size and np.any(np.diff(j1) < -slack1):
            raise ParameterError("J1 must be non-decreasing along the mu grid")
        if j2.size and np.any(np.diff(j2) > slack2):
            raise ParameterError("J2 must be non-increasing along the mu grid")


def compute_alpha(srf_bands: int, hsi_bands: int, s_perdim: float) -> float:
    """Axis-balancing weight (b/B)^2 + (1/s^2)^2."""
    if srf_bands < 1 or hsi_bands < 1:
        raise ParameterError("band counts must be >= 1")
    if srf_bands > hsi_bands:
        raise ParameterError(
            f"response bands ({srf_bands}) cannot exceed cube bands ({hsi_bands})")
    if not (s_perdim >= 1):
        raise ParameterError(f"decimation factor must be >= 1, got {s_perdim!r}")
    return (srf_bands / hsi_bands) ** 2 + (1.0 / s_perdim ** 2) ** 2


def mdc_distance(j1: float, j2: float, ideal: IdealPoint, alpha: float) -> float:
    """Squared weighted distance from (j1, j2) to the ideal point."""
    if not (alpha > 0):
        raise ParameterError(f"alpha must be > 0, got {alpha!r}")
    return (j1 - ideal.i1) ** 2 + alpha * (j2 - ideal.i2) ** 2


def _problem_alpha(problem: FusionProblem) -> float:
    s_eff = math.sqrt(problem.dec.factor)
    return compute_alpha(problem.z.bands, problem.bands, s_eff)


class _CachedObjectives:
    """Memoizes (J1, J2) per exact mu and tags failures with their mu."""

    def __init__(self, problem: FusionProblem):
        self.solver = FusionSolver(problem)
        self.problem = problem
        self.cache: dict[float, tuple[float, float]] = {}

    def __call__(self, mu: float) -> tuple[float, float]:
        mu = float(mu)
        hit = self.cache.get(mu)
        if hit is None:
            try:
                x = self.solver.solve(mu)
                hit = objective_terms(self.problem, x)
            except Exception as e:
                raise SolverFailure(mu, e) from e
            self.cache[mu] = hit
        return hit


def ideal_point(problem: FusionProblem, cfg: MdcConfig = MdcConfig()) -> IdealPoint:
    """I1 = J1 at the vanishing-mu proxy (the bracket's lower endpoint), I2 = 0."""
    evaluate = _CachedObjectives(problem)
    j1, _ = evaluate(cfg.a)
    return IdealPoint(i1=j1, i2=0.0)


def _golden_search(d_of, a: float, b: float, epsilon: float, delta: float,
                   trace=None, to_mu=lambda t: t):
    """Standard golden-section bracket shrink; returns the final (a, b).

    ``d_of`` maps a search coordinate to the distance; ``to_mu`` maps the
    coordinate to the mu recorded in the trace.
    """
    while True:
        left = b - delta * (b - a)
        right = a + delta * (b - a)
        d_left = d_of(left)
        d_right = d_of(right)
        if trace is not None:
            trace.append((to_mu(left), d_left))
            trace.append((to_mu(right), d_right))
        if d_left < d_right:
            b = right
        else:
            a = left
        if (b - a) < epsilon:
            return a, b


def estimate_mu(problem: FusionProblem, cfg: MdcConfig = MdcConfig()
                ) -> tuple[float, list[tuple[float, float]]]:
    """Select mu by golden-section minimization of the ideal-point distance.

    Returns (mu_star, trace); the trace lists every evaluated (mu, distance)
    in evaluation order. mu_star is the final bracket midpoint, multiplied by
    alpha when cfg.apply_alpha_to_result is set. With cfg.log_space, the
    search runs on log10(mu) and epsilon is measured in decades.
    """
    evaluate = _CachedObjectives(problem)
    alpha = _problem_alpha(problem)
    i1, _ = evaluate(cfg.a)
    ideal = IdealPoint(i1=i1)

    def distance_at(mu: float) -> float:
        j1, j2 = evaluate(mu)
        return mdc_distance(j1, j2, ideal, alpha)

    trace: list[tuple[float, float]] = [(cfg.a, distance_at(cfg.a))]
    if cfg.log_space:
        lo, hi = math.log10(cfg.a), math.log10(cfg.b_upper)
        a_end, b_end = _golden_search(lambda t: distance_at(10.0 ** t), lo, hi,
                                      cfg.epsilon, cfg.delta, trace,
                                      to_mu=lambda t: 10.0 ** t)
        mid = 10.0 ** ((a_end + b_end) / 2.0)
    else:
        a_end, b_end = _golden_search(distance_at, cfg.a, cfg.b_upper,
                                      cfg.epsilon, cfg.delta, trace)
        mid = (a_end + b_end) / 2.0
    mu_star = alpha * mid if cfg.apply_alpha_to_result else mid
    log.info("selected mu=%.6g (bracket midpoint %.6g, alpha %.6g, %d evaluations)",
             mu_star, mid, alpha, len(trace))
    return mu_star, trace


def sweep_response_curve(problem: FusionProblem, mu_grid,
                         truth=None, cfg: MdcConfig = MdcConfig()
                         ) -> tuple[ResponseCurve, list[float]]:
    """Solve along a strictly increasing, positive mu grid.

    Returns (curve, distances); per-point solver failures are recorded on the
    curve and the remaining points are still returned. When ``truth`` is
    given, per-mu rmse/psnr are attached to the curve.
    """
    grid = [float(m) for m in mu_grid]
    if not grid:
        raise ParameterError("mu grid must be non-empty")
    arr = np.asarray(grid)
    if np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
        raise ParameterError("mu grid must be positive and strictly increasing")

    solver = FusionSolver(problem)

    def solve_terms(mu):
        try:
            x = solver.solve(mu)
        except Exception as e:
            raise SolverFailure(mu, e) from e
        return x, objective_terms(problem, x)

    alpha = _problem_alpha(problem)
    _, (i1, _) = solve_terms(cfg.a)
    ideal = IdealPoint(i1=i1)

    mus, j1s, j2s, rmses, psnrs = [], [], [], [], []
    failures = []
    for mu in grid:
        try:
            x, (j1, j2) = solve_terms(mu)
        except SolverFailure as e:
            log.warning("sweep point failed: %s", e)
            failures.append((mu, str(e.cause)))
            continue
        mus.append(mu)
        j1s.append(j1)
        j2s.append(j2)
        if truth is not None:
            rmses.append(rmse_metric(truth, x))
            psnrs.append(psnr_metric(truth, x))
    curve = ResponseCurve(
        mu=tuple(mus), j1=tuple(j1s), j2=tuple(j2s),
        rmse=tuple(rmses) if truth is not None else None,
        psnr=tuple(psnrs) if truth is not None else None,
        failures=tuple(failures))
    distances = [mdc_distance(j1, j2, ideal, alpha) for j1, j2 in zip(j1s, j2s)]
    return curve, distances
