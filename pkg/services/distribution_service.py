import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Union

import numpy as np
from scipy.special import ndtr

from models.distributions import AssetSample, BivariateLognormalSpec, LognormalSpec, MomentPair
from models.errors import DegenerateVariance

DEFAULT_STREAM_SIZE = 250_000


def substream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for substream `stream` of `seed`."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def sample_substream(spec: BivariateLognormalSpec, n: int, seed: int, stream: int) -> AssetSample:
    rng = substream_rng(seed, stream)
    z = rng.standard_normal((n, 2))

    # Cholesky factor of the 2x2 log-covariance, valid for singular matrices too
    l11 = math.sqrt(spec.sig1sq)
    l21 = spec.sig12 / l11
    l22 = math.sqrt(max(spec.sig2sq - l21 ** 2, 0.0))

    log_a1 = spec.mu1 + l11 * z[:, 0]
    log_a2 = spec.mu2 + l21 * z[:, 0] + l22 * z[:, 1]
    return AssetSample(np.exp(log_a1), np.exp(log_a2))


def sample_assets(
    spec: BivariateLognormalSpec,
    n: int,
    seed: int,
    stream_size: int = DEFAULT_STREAM_SIZE,
    workers: int = 1,
) -> AssetSample:
    """
    Draw n i.i.d. asset scenarios.

    The sample is the concatenation of fixed-size substreams, so the result
    depends only on (spec, n, seed, stream_size) and never on `workers`.

    Args:
        spec: Joint lognormal law of the exogenous assets
        n: Number of scenarios
        seed: Root seed
        stream_size: Scenarios per substream
        workers: Threads used to fill the substreams

    Returns:
        AssetSample with n scenarios
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if stream_size < 1:
        raise ValueError(f"stream_size must be at least 1, got {stream_size}")

    sizes = [min(stream_size, n - start) for start in range(0, n, stream_size)]
    logging.debug(f"Sampling {n} scenarios in {len(sizes)} substreams (seed={seed})")

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: sample_substream(spec, job[1], seed, job[0]), enumerate(sizes)))
    else:
        parts = [sample_substream(spec, size, seed, stream) for stream, size in enumerate(sizes)]
    return parts[0] if len(parts) == 1 else AssetSample.concat(parts)


def match_lognormal(m: MomentPair) -> LognormalSpec:
    """Lognormal with the given mean and variance (moment matching)."""
    sig_tilde_sq = math.log1p(m.variance / m.mean ** 2)
    mu_tilde = math.log(m.mean) - 0.5 * sig_tilde_sq
    return LognormalSpec(mu_tilde=mu_tilde, sig_tilde_sq=sig_tilde_sq)


def lognormal_moments(spec: LognormalSpec) -> MomentPair:
    mean = spec.shift + math.exp(spec.mu_tilde + 0.5 * spec.sig_tilde_sq)
    variance = math.expm1(spec.sig_tilde_sq) * math.exp(2 * spec.mu_tilde + spec.sig_tilde_sq)
    return MomentPair(mean=mean, variance=variance)


def lognormal_cdf(spec: LognormalSpec, q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """P(W <= q) for W = shift + exp(N(mu_tilde, sig_tilde_sq)); 0 at or below the shift."""
    q_arr = np.asarray(q, dtype=float)
    excess = q_arr - spec.shift
    above = excess > 0
    z = np.where(above, (np.log(np.where(above, excess, 1.0)) - spec.mu_tilde) / spec.sig_tilde, -np.inf)
    result = np.where(above, ndtr(z), 0.0)
    return float(result) if result.ndim == 0 else result


def moments_from_samples(values: np.ndarray) -> MomentPair:
    """Sample mean and unbiased sample variance."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise DegenerateVariance(f"Need at least 2 values for a variance, got {values.size}")
    variance = float(np.var(values, ddof=1))
    if variance <= 0:
        raise DegenerateVariance("Firm values have zero sample variance")
    return MomentPair(mean=float(np.mean(values)), variance=variance)


def coefficient_of_variation(sigma_sq: float) -> float:
    """Coefficient of variation of a lognormal asset with log-variance sigma_sq."""
    return math.sqrt(math.expm1(sigma_sq))


def sigma_sq_for_cv(cv: float) -> float:
    return math.log1p(cv ** 2)
