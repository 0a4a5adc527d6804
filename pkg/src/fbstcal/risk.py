"""Error probabilities of the test that rejects H0 when ev <= k.

Writing xbar = theta + sigma Z / sqrt(n), the event ev > k is
z1 <= Z <= z2 with

    Q  = sqrt(sigma^2 + n v^2) Phi^-1(k/2) / (sqrt(n) v)
    z1 =  Q + sigma (theta0 - m) / (sqrt(n) v^2) - (theta - theta0) sqrt(n) / sigma
    z2 = -Q + sigma (theta0 - m) / (sqrt(n) v^2) - (theta - theta0) sqrt(n) / sigma

so the power is 1 - [Phi(z2) - Phi(z1)].
"""

import functools
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import integrate

from fbstcal.model import PriorSpec, TestConfig, _check_cutoff
from fbstcal.special import SQRT2, norm_cdf, norm_ppf

_CLAMP_SLACK = 1e-12


@dataclass(frozen=True)
class Weights:
    """Loss weights: the objective is a * alpha + b * beta_bar."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        for name in ("a", "b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"weight {name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class PowerTerms:
    Q: float
    z1: float
    z2: float


@dataclass(frozen=True)
class QuadratureOptions:
    """How the prior average of the type II error is integrated.

    ``gauss_hermite`` uses ``order`` nodes in the standardised prior
    variable.  The nodes cannot resolve the acceptance band once it is
    narrow relative to the prior, so the rule falls back to the adaptive
    scheme when n v^2 / sigma^2 exceeds order / 16, or when the order and
    half-order results disagree by more than ``abs_tol``.  ``adaptive`` always uses adaptive Gauss-Kronrod over
    m +- 10 v with the band edges as breakpoints.
    """

    scheme: Literal["gauss_hermite", "adaptive"] = "gauss_hermite"
    order: int = 128
    abs_tol: float = 1e-10

    def __post_init__(self):
        if self.scheme not in ("gauss_hermite", "adaptive"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.order < 1 or (self.scheme == "gauss_hermite" and self.order < 8):
            raise ValueError("gauss_hermite needs order >= 8")
        if not (0.0 < self.abs_tol <= 1e-4):
            raise ValueError("abs_tol must lie in (0, 1e-4]")


DEFAULT_QUADRATURE = QuadratureOptions()


class QuadratureError(ArithmeticError):
    """Integration did not reach the requested tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _clamp_probability(p):
    arr = np.asarray(p, dtype=float)
    assert np.all((arr >= -_CLAMP_SLACK) & (arr <= 1.0 + _CLAMP_SLACK)), (
        f"probability out of range before clamping: {arr.min()!r}..{arr.max()!r}"
    )
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if np.ndim(p) == 0 else out


def _q(k, config):
    _check_cutoff(k)
    if k == 1.0:
        return 0.0
    n, v2 = config.sampling.n, config.prior.v2
    s2 = config.sampling.sigma2
    return math.sqrt(s2 + n * v2) * norm_ppf(k / 2.0) / (math.sqrt(n) * math.sqrt(v2))


def _offsets(config, theta):
    """Prior offset minus standardised distance of theta from theta0."""
    m, v2 = config.prior.m, config.prior.v2
    theta0, sigma, n = config.sampling.theta0, config.sampling.sigma, config.sampling.n
    rn = math.sqrt(n)
    prior_shift = sigma * (theta0 - m) / (rn * v2)
    return prior_shift - (np.asarray(theta, dtype=float) - theta0) * rn / sigma


def power_terms(k, theta, config):
    """Q, z1 and z2 for one value of theta."""
    Q = _q(k, config)
    c = float(_offsets(config, theta))
    return PowerTerms(Q=Q, z1=Q + c, z2=-Q + c)


def _acceptance(z1, z2):
    # Phi(z2) - Phi(z1) without cancellation when both sit in the upper tail
    upper = z1 > 0.0
    return np.where(upper, norm_cdf(-z1) - norm_cdf(-z2), norm_cdf(z2) - norm_cdf(z1))


def power(k, theta, config):
    """Probability of rejecting H0 when the true mean is theta.

    Computed as Phi(z1) + Phi(-z2), which equals 1 - [Phi(z2) - Phi(z1)]
    but stays accurate when the rejection probability is tiny.
    """
    Q = _q(k, config)
    c = _offsets(config, theta)
    p = norm_cdf(Q + c) + norm_cdf(Q - c)
    return _clamp_probability(float(p) if np.ndim(theta) == 0 else p)


def type1_error(k, config):
    """alpha(k): rejection probability at theta = theta0."""
    return power(k, config.sampling.theta0, config)


def acceptance_probability(k, theta, config):
    """1 - power, vectorised over theta."""
    Q = _q(k, config)
    c = _offsets(config, theta)
    p = _acceptance(Q + c, -Q + c)
    return _clamp_probability(float(p) if np.ndim(theta) == 0 else p)


@functools.lru_cache(maxsize=16)
def _hermite_rule(order):
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w / math.sqrt(math.pi)


def _gauss_hermite(k, config, prior, order):
    t, w = _hermite_rule(order)
    theta = prior.m + SQRT2 * prior.v * t
    return float(w @ acceptance_probability(k, theta, config))


def _adaptive(k, config, prior, abs_tol):
    Q = _q(k, config)
    m, v = prior.m, prior.v
    lo, hi = m - 10.0 * v, m + 10.0 * v

    theta0, sigma, n = config.sampling.theta0, config.sampling.sigma, config.sampling.n
    rn = math.sqrt(n)
    c0 = sigma * (theta0 - config.prior.m) / (rn * config.prior.v2)
    # band edges: the theta values where z1 = 0 and z2 = 0
    edges = sorted({theta0 + sigma * (c0 + Q) / rn, theta0 + sigma * (c0 - Q) / rn})
    points = [e for e in edges if lo < e < hi]

    erfc = math.erfc
    inv_v = 1.0 / v
    norm = inv_v / math.sqrt(2.0 * math.pi)

    def integrand(theta):
        c = c0 - (theta - theta0) * rn / sigma
        z1, z2 = Q + c, -Q + c
        if z1 > 0.0:
            acc = 0.5 * (erfc(z1 / SQRT2) - erfc(z2 / SQRT2))
        else:
            acc = 0.5 * (erfc(-z2 / SQRT2) - erfc(-z1 / SQRT2))
        u = (theta - m) * inv_v
        return acc * norm * math.exp(-0.5 * u * u)

    value, err = integrate.quad(
        integrand, lo, hi, points=points or None,
        epsabs=abs_tol * 1e-3, epsrel=0.0, limit=500,
    )
    if not err <= abs_tol:
        raise QuadratureError(
            f"adaptive quadrature reached error {err:.3g} > {abs_tol:.3g}", value, err
        )
    return value


def expected_type2_error(k, config, quad=None, design_prior: Optional[PriorSpec] = None):
    """beta_bar(k): the type II error probability averaged over a prior.

    The average is taken over the whole real line; the null point has
    prior measure zero.  ``design_prior`` is the prior used for this
    average and defaults to the analysis prior in ``config``.
    """
    quad = quad or DEFAULT_QUADRATURE
    prior = design_prior or config.prior
    _check_cutoff(k)
    if k == 1.0:
        return 0.0
    resolved = config.sampling.n * prior.v2 / config.sampling.sigma2 <= quad.order / 16
    if quad.scheme == "gauss_hermite" and resolved:
        value = _gauss_hermite(k, config, prior, quad.order)
        coarse = _gauss_hermite(k, config, prior, max(quad.order // 2, 4))
        if abs(value - coarse) > quad.abs_tol:
            value = _adaptive(k, config, prior, quad.abs_tol)
    else:
        value = _adaptive(k, config, prior, quad.abs_tol)
    return _clamp_probability(value)


def objective(k, config, weights=None, quad=None, design_prior: Optional[PriorSpec] = None):
    """a * alpha(k) + b * beta_bar(k)."""
    weights = weights or Weights()
    alpha = type1_error(k, config)
    beta_bar = expected_type2_error(k, config, quad, design_prior)
    return weights.a * alpha + weights.b * beta_bar


def error_rates(k, config, weights=None, quad=None, design_prior: Optional[PriorSpec] = None):
    """(alpha, beta_bar, objective) at one cut-off."""
    weights = weights or Weights()
    alpha = type1_error(k, config)
    beta_bar = expected_type2_error(k, config, quad, design_prior)
    return alpha, beta_bar, weights.a * alpha + weights.b * beta_bar

