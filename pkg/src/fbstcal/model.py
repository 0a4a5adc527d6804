"""Normal mean with known variance under a conjugate normal prior.

The point null H0: theta = theta0 is tested with the FBST evidence

    ev = 2 Phi(-|sigma^2 (theta0 - m) + n v^2 (theta0 - xbar)| / (sigma v sqrt(sigma^2 + n v^2)))

and rejected when ev <= k.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from fbstcal.special import norm_cdf


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class PriorSpec:
    """Normal(m, v2) prior on the mean."""

    m: float = 0.0
    v2: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.m):
            raise ValueError(f"m must be finite, got {self.m!r}")
        _check_positive("v2", self.v2)

    @property
    def v(self):
        return math.sqrt(self.v2)


@dataclass(frozen=True)
class SamplingSpec:
    """n observations from Normal(theta, sigma2) with sigma2 known."""

    n: int
    theta0: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not math.isfinite(self.theta0):
            raise ValueError(f"theta0 must be finite, got {self.theta0!r}")
        _check_positive("sigma2", self.sigma2)

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class TestConfig:
    """Everything that stays fixed for one testing problem."""

    __test__ = False  # keep pytest from collecting this class

    prior: PriorSpec
    sampling: SamplingSpec

    @classmethod
    def of(cls, n, v2=1.0, m=0.0, sigma2=1.0, theta0=0.0):
        return cls(PriorSpec(m=m, v2=v2), SamplingSpec(n=n, theta0=theta0, sigma2=sigma2))

    def replace(self, **changes):
        """Copy with some of n, v2, m, sigma2, theta0 changed."""
        fields = dict(
            n=self.sampling.n,
            v2=self.prior.v2,
            m=self.prior.m,
            sigma2=self.sampling.sigma2,
            theta0=self.sampling.theta0,
        )
        unknown = set(changes) - set(fields)
        if unknown:
            raise TypeError(f"unknown fields: {sorted(unknown)}")
        fields.update(changes)
        return TestConfig.of(**fields)


@dataclass(frozen=True)
class PosteriorParams:
    mean: float
    variance: float


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


def _finite_xbar(xbar):
    arr = np.asarray(xbar, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("xbar must be finite")
    return arr


def posterior_params(config, xbar):
    """Posterior mean and variance of theta given the sample mean."""
    x = float(_finite_xbar(xbar))
    m, v2 = config.prior.m, config.prior.v2
    s2, n = config.sampling.sigma2, config.sampling.n
    denom = s2 + n * v2
    return PosteriorParams(mean=(s2 * m + n * v2 * x) / denom, variance=s2 * v2 / denom)


def tangential_interval(config, xbar):
    """Closure of the set {theta : f(theta|x) > f(theta0|x)}.

    The posterior is normal, so this is the interval between theta0 and its
    mirror image 2M - theta0 about the posterior mean M.  It collapses to
    the single point theta0 when M = theta0.
    """
    theta0 = config.sampling.theta0
    mirror = 2.0 * posterior_params(config, xbar).mean - theta0
    return (min(theta0, mirror), max(theta0, mirror))


def _evidence_distance(config, xbar):
    m, v = config.prior.m, config.prior.v
    s2, sigma, n = config.sampling.sigma2, config.sampling.sigma, config.sampling.n
    theta0 = config.sampling.theta0
    v2 = config.prior.v2
    num = np.abs(s2 * (theta0 - m) + n * v2 * (theta0 - xbar))
    return num / (sigma * v * math.sqrt(s2 + n * v2))


def evidence(config, xbar):
    """FBST evidence in favour of H0 at the observed sample mean(s).

    Accepts a scalar or an array of sample means.  The evidence is exactly
    1.0 when the posterior mean coincides with theta0.
    """
    x = _finite_xbar(xbar)
    d = _evidence_distance(config, x)
    ev = np.where(d == 0.0, 1.0, 2.0 * norm_cdf(-d))
    return float(ev) if np.ndim(xbar) == 0 else ev


def _check_cutoff(k):
    if not (0.0 < k <= 1.0):
        raise ValueError(f"cut-off k must lie in (0, 1], got {k!r}")


def rejects(ev, k):
    """Boolean mask of the rejection region ev <= k (vectorised)."""
    _check_cutoff(k)
    return np.asarray(ev) <= k


def decide(ev, k):
    """Reject H0 when ev <= k; ties reject."""
    _check_cutoff(k)
    return Decision.REJECT if ev <= k else Decision.ACCEPT
