"""Simulation estimates of the rejection rates, used to cross-check the
closed-form error probabilities.

Random numbers come from numpy's Philox4x64-10 counter-based generator.
The draws are cut into chunks of ``CHUNK_SIZE``; chunk ``c`` of stream
``s`` is keyed by ``SeedSequence(seed, spawn_key=(s, c))``, so an estimate
depends only on (inputs, seed, draws) and never on the number of workers.
Uniforms are formed from the top 53 bits of each raw 64-bit output as
(bits + 0.5) / 2**53, which lies strictly inside (0, 1), and mapped to
normals with ``norm_ppf``.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from fbstcal.model import _check_cutoff, evidence
from fbstcal.risk import Weights
from fbstcal.special import norm_ppf

CHUNK_SIZE = 1 << 16
MIN_DRAWS = 1000

NOISE_STREAM = 0  # sampling noise of xbar around theta
PRIOR_STREAM = 1  # theta drawn from the prior


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    draws: int
    seed: int


class MonteCarloCutoff(NamedTuple):
    k: float
    objectives: tuple


def _check_run(draws, seed):
    if int(draws) != draws or draws < MIN_DRAWS:
        raise ValueError(f"draws must be an integer >= {MIN_DRAWS}, got {draws!r}")
    if int(seed) != seed or not (0 <= seed < 2**64):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")


def standard_normals(seed, stream, chunk, size):
    """Normal variates for one chunk of one stream."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(stream, chunk))
    raw = np.random.Philox(seq).random_raw(size)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return norm_ppf(u)


def _chunks(draws):
    return [(c, min(CHUNK_SIZE, draws - c * CHUNK_SIZE)) for c in range(-(-draws // CHUNK_SIZE))]


def _simulated_evidence(config, seed, chunk, size, theta=None, design_prior=None):
    """Evidence for `size` simulated sample means.

    With ``theta`` given the data come from that mean; otherwise theta is
    first drawn from ``design_prior`` (default: the analysis prior).
    """
    if theta is None:
        prior = design_prior or config.prior
        theta = prior.m + prior.v * standard_normals(seed, PRIOR_STREAM, chunk, size)
    scale = config.sampling.sigma / math.sqrt(config.sampling.n)
    xbar = theta + scale * standard_normals(seed, NOISE_STREAM, chunk, size)
    return evidence(config, xbar)


def _run_chunks(fn, draws, workers):
    chunks = _chunks(draws)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda cs: fn(*cs), chunks))
    return [fn(c, size) for c, size in chunks]


def _binomial(count, draws, seed):
    p = count / draws
    return McEstimate(value=p, std_error=math.sqrt(p * (1.0 - p) / draws), draws=draws, seed=int(seed))


def estimate_rejection_rate(k, theta, config, draws, seed, workers=1):
    """Fraction of simulated samples from Normal(theta, sigma2) that reject H0."""
    _check_cutoff(k)
    _check_run(draws, seed)

    def count(chunk, size):
        ev = _simulated_evidence(config, seed, chunk, size, theta=float(theta))
        return int(np.count_nonzero(ev <= k))

    return _binomial(sum(_run_chunks(count, draws, workers)), int(draws), seed)


def estimate_expected_type2(k, config, draws, seed, workers=1, design_prior=None):
    """Fraction of (theta, sample) draws, theta from the prior, that accept H0."""
    _check_cutoff(k)
    _check_run(draws, seed)

    def count(chunk, size):
        ev = _simulated_evidence(config, seed, chunk, size, design_prior=design_prior)
        return int(np.count_nonzero(ev > k))

    return _binomial(sum(_run_chunks(count, draws, workers)), int(draws), seed)


def estimate_optimal_cutoff(
    config,
    k_grid: Sequence[float],
    draws: int,
    seed: int,
    weights: Optional[Weights] = None,
    design_prior=None,
    workers: int = 1,
) -> MonteCarloCutoff:
    """Grid minimiser of the simulated a * alpha + b * beta_bar.

    Every grid point reuses the same simulated samples (common random
    numbers), so the simulated rejection rate is nondecreasing in k.
    """
    weights = weights or Weights()
    ks = np.asarray([float(k) for k in k_grid])
    if ks.size == 0 or np.any(np.diff(ks) < 0):
        raise ValueError("k_grid must be non-empty and sorted ascending")
    for k in ks:
        _check_cutoff(k)
    _check_run(draws, seed)

    theta0 = config.sampling.theta0
    null_ev = np.sort(np.concatenate(_run_chunks(
        lambda c, size: _simulated_evidence(config, seed, c, size, theta=theta0), draws, workers)))
    alt_ev = np.sort(np.concatenate(_run_chunks(
        lambda c, size: _simulated_evidence(config, seed, c, size, design_prior=design_prior),
        draws, workers)))

    rejected_null = np.searchsorted(null_ev, ks, side="right") / draws
    accepted_alt = 1.0 - np.searchsorted(alt_ev, ks, side="right") / draws
    objectives = weights.a * rejected_null + weights.b * accepted_alt
    i = int(np.argmin(objectives))
    return MonteCarloCutoff(k=float(ks[i]), objectives=tuple(float(v) for v in objectives))
