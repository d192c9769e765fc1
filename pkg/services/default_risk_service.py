import logging
import math
from typing import Optional, Protocol, Tuple

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from config import Config
from models.distributions import AssetSample, BivariateLognormalSpec, LognormalSpec
from models.errors import DegenerateVariance
from models.risk import PdComparison, PdEstimate, RegionProbability, relative_risk
from models.xos import XosStructure
from services.distribution_service import (
    DEFAULT_STREAM_SIZE,
    lognormal_cdf,
    match_lognormal,
    moments_from_samples,
    sample_assets,
)
from services.valuation_service import ClaimArrays, value_arrays

__all__ = [
    "MonteCarloPdEstimator",
    "PdEstimatorInterface",
    "compare_on_sample",
    "lognormal_pd_of_values",
    "pd_analytic_suzuki_limit_region",
    "relative_risk",
]


def _debt(x: XosStructure, firm: int) -> float:
    return x.d1 if firm == 1 else x.d2


def lognormal_pd_of_values(values: np.ndarray, threshold: float) -> Tuple[float, LognormalSpec]:
    """Match a lognormal to the sample moments of `values` and evaluate its CDF at the threshold."""
    matched = match_lognormal(moments_from_samples(values))
    return lognormal_cdf(matched, threshold), matched


def compare_on_sample(x: XosStructure, claims: ClaimArrays, firm: int = 1) -> PdComparison:
    """Both default probabilities from one valued sample."""
    n = len(claims.area)
    suzuki = PdEstimate.from_count(int(np.count_nonzero(claims.defaults(firm))), n)
    p_lognormal, matched = lognormal_pd_of_values(claims.firm_values(firm), _debt(x, firm))
    return PdComparison.from_estimates(suzuki, p_lognormal, matched)


class PdEstimatorInterface(Protocol):
    """Protocol for simulation-based default probability estimators."""

    def sample(self, spec: BivariateLognormalSpec, n: int, seed: int) -> AssetSample:
        ...

    def compare_models(
        self,
        x: XosStructure,
        spec: BivariateLognormalSpec,
        n: int,
        seed: int,
        firm: int = 1,
    ) -> PdComparison:
        """
        Suzuki and lognormal default probabilities of one firm.

        Args:
            x: Cross-ownership structure
            spec: Joint lognormal law of the exogenous assets
            n: Sample size
            seed: Root seed of the sample
            firm: Firm whose default is measured

        Returns:
            PdComparison of both estimates on the same scenarios
        """
        ...


class MonteCarloPdEstimator:
    """Default probabilities from bivariate lognormal samples drawn in fixed-size substreams."""

    def __init__(self, stream_size: int = DEFAULT_STREAM_SIZE, workers: int = 1):
        """
        Initialize the estimator.

        Args:
            stream_size: Scenarios per random substream; part of what a seed reproduces
            workers: Threads drawing substreams; never changes the sample
        """
        if stream_size < 1 or workers < 1:
            raise ValueError(f"stream_size and workers must be positive, got ({stream_size}, {workers})")
        self.stream_size = stream_size
        self.workers = workers

    @classmethod
    def from_config(cls, config: Config) -> "MonteCarloPdEstimator":
        return cls(stream_size=config.stream_size, workers=config.workers)

    def sample(self, spec: BivariateLognormalSpec, n: int, seed: int) -> AssetSample:
        return sample_assets(spec, n, seed, stream_size=self.stream_size, workers=self.workers)

    def value_sample(self, x: XosStructure, spec: BivariateLognormalSpec, n: int, seed: int) -> ClaimArrays:
        sample = self.sample(spec, n, seed)
        return value_arrays(x, sample.a1, sample.a2)

    def estimate_pd_suzuki(
        self,
        x: XosStructure,
        spec: BivariateLognormalSpec,
        n: int,
        seed: int,
        firm: int = 1,
    ) -> PdEstimate:
        """Fraction of sampled scenarios in the firm's default areas."""
        claims = self.value_sample(x, spec, n, seed)
        estimate = PdEstimate.from_count(int(np.count_nonzero(claims.defaults(firm))), n)
        logging.info(f"Suzuki PD firm {firm}: {estimate.p:.6f} (se {estimate.se:.2e}, n={n})")
        return estimate

    def estimate_pd_lognormal(
        self,
        x: XosStructure,
        spec: BivariateLognormalSpec,
        n: int,
        seed: int,
        firm: int = 1,
    ) -> float:
        """PD of the lognormal matched to the sample moments of the firm value."""
        claims = self.value_sample(x, spec, n, seed)
        try:
            p, matched = lognormal_pd_of_values(claims.firm_values(firm), _debt(x, firm))
        except DegenerateVariance as e:
            logging.error(f"Error matching lognormal for firm {firm}: {e}")
            raise
        logging.info(f"Lognormal PD firm {firm}: {p:.6f} (mu~={matched.mu_tilde:.4f}, sig~^2={matched.sig_tilde_sq:.4f})")
        return p

    def compare_models(
        self,
        x: XosStructure,
        spec: BivariateLognormalSpec,
        n: int,
        seed: int,
        firm: int = 1,
    ) -> PdComparison:
        """Suzuki and lognormal PDs on the same simulated scenarios."""
        claims = self.value_sample(x, spec, n, seed)
        comparison = compare_on_sample(x, claims, firm)
        logging.info(
            f"PD comparison firm {firm}: p_s={comparison.p_suzuki:.6f}, "
            f"p_l={comparison.p_lognormal:.6f}, rr={comparison.rr:.5g}")
        return comparison


def _region_mc(d1: float, d2: float, spec: BivariateLognormalSpec, n: int, seed: int,
               estimator: PdEstimatorInterface) -> RegionProbability:
    sample = estimator.sample(spec, n, seed)
    inside = (sample.a1 < d1) & (sample.a1 + sample.a2 <= d1 + d2)
    estimate = PdEstimate.from_count(int(np.count_nonzero(inside)), n)
    return RegionProbability(probability=estimate.p, error=estimate.se, method="mc")


def _region_quadrature(d1: float, d2: float, spec: BivariateLognormalSpec) -> RegionProbability:
    # Integrate over y = log A1 the conditional probability P(A2 <= d1 + d2 - e^y | y)
    sig1 = math.sqrt(spec.sig1sq)
    slope = spec.sig12 / spec.sig1sq
    cond_sd = math.sqrt(max(spec.sig2sq - spec.sig12 ** 2 / spec.sig1sq, 0.0))
    total = d1 + d2

    def integrand(y: float) -> float:
        density = math.exp(-0.5 * ((y - spec.mu1) / sig1) ** 2) / (sig1 * math.sqrt(2 * math.pi))
        cond_mean = spec.mu2 + slope * (y - spec.mu1)
        room = math.log(total - math.exp(y))
        if cond_sd == 0:
            return density if room >= cond_mean else 0.0
        return density * float(ndtr((room - cond_mean) / cond_sd))

    upper = math.log(d1)
    lower = min(spec.mu1 - 12 * sig1, upper - 1.0)
    value, error = integrate.quad(integrand, lower, upper, epsabs=1e-13, epsrel=1e-11, limit=200)
    if error > 1e-8:
        logging.warning(f"Quadrature error estimate {error:.2e} is large")
    return RegionProbability(probability=value, error=error, method="quadrature")


def pd_analytic_suzuki_limit_region(
    x: XosStructure,
    spec: BivariateLognormalSpec,
    firm: int = 1,
    method: str = "mc",
    n: int = 1_000_000,
    seed: int = 0,
    estimator: Optional[PdEstimatorInterface] = None,
) -> RegionProbability:
    """
    Probability of {a_i < d_i, a1 + a2 <= d1 + d2} under the asset law.

    Only the face values of `x` matter. Firm 2 is handled by relabelling the firms.

    Args:
        x: Structure supplying d1, d2
        spec: Joint lognormal law of the exogenous assets
        firm: Firm whose limiting default region is measured
        method: "mc" (reports its standard error) or "quadrature" (reports the integration error bound)
        n: Monte Carlo sample size
        seed: Monte Carlo seed
        estimator: Sampler of the "mc" method (default: MonteCarloPdEstimator())

    Returns:
        RegionProbability
    """
    d_own, d_other = (x.d1, x.d2) if firm == 1 else (x.d2, x.d1)
    law = spec if firm == 1 else spec.swapped()
    try:
        if method == "mc":
            result = _region_mc(d_own, d_other, law, n, seed, estimator or MonteCarloPdEstimator())
        elif method == "quadrature":
            result = _region_quadrature(d_own, d_other, law)
        else:
            raise ValueError(f"Unknown method '{method}'")
    except Exception as e:
        logging.error(f"Error computing limit region probability: {e}")
        raise
    logging.info(f"Limit region probability ({result.method}): {result.probability:.6f} +/- {result.error:.2e}")
    return result
