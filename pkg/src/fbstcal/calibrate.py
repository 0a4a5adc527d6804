"""Choosing the evidence cut-off k as a function of the sample size.

For fixed weights (a, b) the cut-off minimises a * alpha(k) + b * beta_bar(k).
The objective is smooth but not known to be unimodal, so the minimiser is
located on a uniform grid first and then refined by golden-section search
inside the cell pair around the best grid point.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from fbstcal.model import PriorSpec, TestConfig
from fbstcal.risk import Weights, error_rates

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerOptions:
    grid_points: int = 1000
    k_tol: float = 1e-8
    k_min: float = 1e-9
    k_max: float = 1.0 - 1e-9
    max_evaluations: int = 5000

    def __post_init__(self):
        if self.grid_points < 100:
            raise ValueError("grid_points must be at least 100")
        if not self.k_tol > 0:
            raise ValueError("k_tol must be positive")
        if not (0.0 < self.k_min < self.k_max < 1.0):
            raise ValueError("need 0 < k_min < k_max < 1")
        if self.max_evaluations < self.grid_points:
            raise ValueError("max_evaluations must cover the grid")


@dataclass(frozen=True)
class CalibrationResult:
    k_star: float
    alpha_star: float
    beta_bar_star: float
    objective_star: float
    evaluations: int
    converged: bool


class CalibrationError(RuntimeError):
    """The search ran out of evaluations; ``result`` holds the best point seen."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SweepRow:
    n: int
    v2: float
    k_star: float
    alpha_star: float
    beta_bar_star: float
    status: str = "ok"


class RiskPoint(NamedTuple):
    k: float
    alpha: float
    beta_bar: float
    objective: float


class ErrorRow(NamedTuple):
    n: int
    k_star: float
    alpha_star: float
    beta_bar_star: float
    objective_star: float


class _Objective:
    """Counts evaluations and remembers (alpha, beta_bar) per k."""

    def __init__(self, config, weights, quad, design_prior):
        self.config = config
        self.weights = weights
        self.quad = quad
        self.design_prior = design_prior
        self.seen = {}

    def __call__(self, k):
        k = float(k)
        if k not in self.seen:
            self.seen[k] = error_rates(k, self.config, self.weights, self.quad, self.design_prior)
        return self.seen[k][2]

    @property
    def evaluations(self):
        return len(self.seen)

    def best(self):
        # smallest objective, ties to the smaller k
        k = min(self.seen, key=lambda kk: (self.seen[kk][2], kk))
        return k, self.seen[k]


def _golden_section(f, lo, hi, tol, budget):
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol and budget() > 0:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    return hi - lo <= tol


def optimal_cutoff(
    config: TestConfig,
    weights: Optional[Weights] = None,
    opts: Optional[OptimizerOptions] = None,
    quad=None,
    design_prior: Optional[PriorSpec] = None,
) -> CalibrationResult:
    """Cut-off k* in [k_min, k_max] minimising a * alpha + b * beta_bar.

    Raises CalibrationError (carrying the best point found) when the
    golden-section refinement cannot reach ``k_tol`` within
    ``max_evaluations`` objective evaluations.
    """
    weights = weights or Weights()
    opts = opts or OptimizerOptions()
    f = _Objective(config, weights, quad, design_prior)

    grid = np.linspace(opts.k_min, opts.k_max, opts.grid_points)
    values = np.array([f(k) for k in grid])
    i = int(np.argmin(values))  # first occurrence: ties go to the smaller k
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])

    converged = _golden_section(
        f, lo, hi, opts.k_tol, lambda: opts.max_evaluations - f.evaluations
    )
    k_star, (alpha, beta_bar, value) = f.best()
    result = CalibrationResult(
        k_star=k_star,
        alpha_star=alpha,
        beta_bar_star=beta_bar,
        objective_star=value,
        evaluations=f.evaluations,
        converged=converged,
    )
    if not converged:
        raise CalibrationError(
            f"no convergence to k_tol={opts.k_tol:g} within {opts.max_evaluations} evaluations",
            result,
        )
    return result


def _sweep_row(args):
    config, weights, opts, quad, design_prior = args
    n, v2 = config.sampling.n, config.prior.v2
    try:
        res = optimal_cutoff(config, weights, opts, quad, design_prior)
        status = "ok"
    except CalibrationError as exc:
        res, status = exc.result, "not_converged"
    except (ArithmeticError, ValueError) as exc:
        nan = float("nan")
        return SweepRow(n, v2, nan, nan, nan, status=f"failed: {exc}")
    return SweepRow(n, v2, res.k_star, res.alpha_star, res.beta_bar_star, status)


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def cutoff_table(
    n_list: Sequence[int],
    v2_list: Sequence[float],
    base: Optional[TestConfig] = None,
    weights: Optional[Weights] = None,
    opts: Optional[OptimizerOptions] = None,
    quad=None,
    design_v2_list: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> list:
    """Optimal cut-off for every (v2, n) pair, ordered by (v2, n).

    ``design_v2_list``, when given, pairs each prior variance with the
    variance of the prior used to average the type II error.  A row whose
    calibration fails is returned with a non-"ok" status instead of
    aborting the table.
    """
    if not n_list or not v2_list:
        raise ValueError("n_list and v2_list must be non-empty")
    if design_v2_list is not None and len(design_v2_list) != len(v2_list):
        raise ValueError("design_v2_list must match v2_list in length")
    base = base or TestConfig.of(n=1)
    design = dict(zip(v2_list, design_v2_list)) if design_v2_list is not None else {}

    jobs = []
    for v2, n in sorted((float(v2), int(n)) for v2 in v2_list for n in n_list):
        config = base.replace(n=n, v2=v2)
        dp = PriorSpec(m=base.prior.m, v2=design[v2]) if v2 in design else None
        jobs.append((config, weights, opts, quad, dp))
    return _map(_sweep_row, jobs, workers)


def risk_curve(
    config: TestConfig,
    k_grid: Sequence[float],
    weights: Optional[Weights] = None,
    quad=None,
    design_prior: Optional[PriorSpec] = None,
) -> list:
    """alpha, beta_bar and the weighted objective at every k of an ascending grid."""
    ks = [float(k) for k in k_grid]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_grid must be sorted ascending")
    return [RiskPoint(k, *error_rates(k, config, weights, quad, design_prior)) for k in ks]


def _error_row(args):
    config, weights, opts, quad, design_prior = args
    res = optimal_cutoff(config, weights, opts, quad, design_prior)
    return ErrorRow(config.sampling.n, res.k_star, res.alpha_star, res.beta_bar_star, res.objective_star)


def error_vs_n(
    n_list: Sequence[int],
    base: TestConfig,
    weights: Optional[Weights] = None,
    opts: Optional[OptimizerOptions] = None,
    quad=None,
    design_prior: Optional[PriorSpec] = None,
    workers: int = 1,
) -> list:
    """Optimal error rates for each n, in input order."""
    if not n_list:
        raise ValueError("n_list must be non-empty")
    jobs = [(base.replace(n=int(n)), weights, opts, quad, design_prior) for n in n_list]
    return _map(_error_row, jobs, workers)
