import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from models.distributions import MomentPair
from models.errors import InfeasibleGeometry, InvalidMoments
from models.mixture import Crossings, MixtureMoments, ScenarioDistribution, TwoPointLaw
from models.xos import AssetScenario, SuzukiArea, XosStructure
from services.distribution_service import lognormal_cdf, match_lognormal
from services.valuation_service import value_arrays

# Relative distance of the solvent atom above d1 in the overestimation case
BORDER_DISTANCE = 1e-6


def _phi_argument(mean, second, d1: float):
    mean = np.asarray(mean, dtype=float)
    second = np.asarray(second, dtype=float)
    if np.any(mean <= 0):
        raise InvalidMoments("Mixture mean must be positive")
    sig_sq = np.log(second / mean ** 2)
    if np.any(sig_sq <= 0):
        raise InvalidMoments("Mixture implies a non-positive lognormal variance")
    mu = 2 * np.log(mean) - 0.5 * np.log(second)
    return (math.log(d1) - mu) / np.sqrt(sig_sq)


def phi_argument(m: MixtureMoments, d1: float) -> float:
    """Standard normal quantile whose CDF is h(p); its sign decides h(p) against 0.5."""
    return float(_phi_argument(m.mean(), m.second_moment(), d1))


def h_curve(m: MixtureMoments, d1: float) -> float:
    """Matched-lognormal PD of the mixture with default weight m.p."""
    if not m.supports_threshold(d1):
        raise InvalidMoments(f"Solvent moments ({m.x2}, {m.y2}) fall below d1={d1}")
    return float(ndtr(phi_argument(m, d1)))


def h_values(m: MixtureMoments, d1: float, ps: np.ndarray) -> np.ndarray:
    ps = np.asarray(ps, dtype=float)
    return ndtr(_phi_argument(ps * m.x1 + m.x2, ps * m.y1 + m.y2, d1))


def threshold(mean: float, second_moment: float) -> float:
    """E(V)^2 / sqrt(E(V^2)), never above E(V) by Jensen's inequality."""
    return mean ** 2 / math.sqrt(second_moment)


def find_crossings(m: MixtureMoments, d1: float, grid_n: int = 1000) -> Crossings:
    """
    Locate where h(p) - p changes sign on [0, 1].

    An endpoint where the mixture collapses to a single value (two-point laws)
    is left out of the scan, so the search runs on the open side of it.

    Args:
        m: Mixture moments; only x1, x2, y1, y2 are used
        d1: Face value of firm 1
        grid_n: Number of grid intervals of the sign scan

    Returns:
        Crossings with the first and last sign change, refined by bisection to 1e-8
    """
    if grid_n < 100:
        raise ValueError(f"grid_n must be at least 100, got {grid_n}")
    if not m.has_interior_spread():
        raise InvalidMoments("Mixture variance vanishes inside (0, 1)")
    if not m.supports_threshold(d1):
        raise InvalidMoments(f"Solvent moments ({m.x2}, {m.y2}) fall below d1={d1}")

    ps = np.linspace(0.0, 1.0, grid_n + 1)
    if not m.has_spread_at(0.0):
        ps = ps[1:]
    if not m.has_spread_at(1.0):
        logging.info("Mixture collapses at p = 1; scanning up to the last interior grid point")
        ps = ps[:-1]
    gap = h_values(m, d1, ps) - ps

    def gap_at(p: float) -> float:
        return float(h_values(m, d1, p)) - p

    def refine(i: int) -> float:
        if gap[i] == 0:
            return float(ps[i])
        if gap[i + 1] == 0:
            return float(ps[i + 1])
        return optimize.bisect(gap_at, ps[i], ps[i + 1], xtol=1e-8)

    if gap[0] <= 0:
        logging.info(f"h(p) <= p already at p={ps[0]:.3g}; no prefix with h(p) > p")
        epsilon_hat = 0.0
    elif np.all(gap > 0):
        epsilon_hat = 1.0
    else:
        first = int(np.argmax(gap <= 0))
        epsilon_hat = refine(first - 1)

    non_negative = np.nonzero(gap >= 0)[0]
    if non_negative.size == 0:
        epsilon_prime_hat = 0.0
    else:
        last = int(non_negative[-1])
        epsilon_prime_hat = refine(last) if last < ps.size - 1 else 1.0

    logging.info(f"h(p) crossings: epsilon={epsilon_hat:.6g}, epsilon'={epsilon_prime_hat:.6g}")
    return Crossings(epsilon_hat=epsilon_hat, epsilon_prime_hat=epsilon_prime_hat)


def mixture_variance(p: float, var_d: float, var_s: float, mean_d: float, mean_s: float) -> float:
    """Variance of the mixture: within-region variances plus the spread of the conditional means."""
    return p * var_d + (1 - p) * var_s + p * (1 - p) * (mean_d - mean_s) ** 2


def conditional_moments(
    values: np.ndarray,
    defaulted: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> MixtureMoments:
    """Mixture moments of a (weighted) sample of firm values split by default."""
    values = np.asarray(values, dtype=float)
    defaulted = np.asarray(defaulted, dtype=bool)
    weights = np.full(values.shape, 1.0 / values.size) if weights is None else np.asarray(weights, dtype=float)
    if not (defaulted.any() and (~defaulted).any()):
        raise InvalidMoments("Sample needs both defaulted and solvent values")

    def region_moments(mask: np.ndarray) -> Tuple[float, float]:
        w = weights[mask] / weights[mask].sum()
        return float(np.sum(w * values[mask])), float(np.sum(w * values[mask] ** 2))

    mean_d, second_d = region_moments(defaulted)
    mean_s, second_s = region_moments(~defaulted)
    p = float(weights[defaulted].sum() / weights.sum())
    return MixtureMoments.from_conditionals(p, mean_d, mean_s, second_d, second_s)


def reweight(defaulted: np.ndarray, p: float) -> np.ndarray:
    """
    Weights turning an equally weighted sample into one with default probability p
    while keeping the conditional laws on the default and solvent regions.
    """
    defaulted = np.asarray(defaulted, dtype=bool)
    n_default = int(np.count_nonzero(defaulted))
    n_solvent = defaulted.size - n_default
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} is not a probability")
    if (p > 0 and n_default == 0) or (p < 1 and n_solvent == 0):
        raise InvalidMoments("Cannot reweight a sample lacking one of the regions")
    return np.where(
        defaulted,
        p / n_default if n_default else 0.0,
        (1 - p) / n_solvent if n_solvent else 0.0,
    )


def quartic(mean: float, p: float, d1: float) -> float:
    """Non-negative iff the two-point law with this mean has a lognormal PD of at most 0.5."""
    return mean ** 4 * (1 - p) + d1 ** 3 * p * mean - mean ** 2 * d1 ** 2 - 0.25 * d1 ** 4 * p


def build_overestimation_case(p: float, d1: float, border_distance: float = BORDER_DISTANCE) -> TwoPointLaw:
    """
    Two-point law with default probability p whose solvent atom sits just above d1.

    The mean stays at or below d1, which forces the matched lognormal PD to 0.5 or more.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} must lie in (0, 1)")
    # Keep (1 - p) * delta <= 0.5 * p so that the mean does not exceed d1
    delta = min(border_distance, 0.25 * p / (1 - p))
    hi = (1 + delta) * d1
    law = TwoPointLaw(p=p, d1=d1, mean=0.5 * p * d1 + (1 - p) * hi)
    logging.info(f"Overestimation case p={p}: mean={law.mean:.6g} <= d1={d1}")
    return law


def build_underestimation_case(p: float, d1: float, max_doublings: int = 64) -> TwoPointLaw:
    """Two-point law with default probability p and the smallest mean d1 * 2^k (k >= 1) meeting the quartic condition."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} must lie in (0, 1)")
    for k in range(1, max_doublings + 1):
        mean = d1 * 2.0 ** k
        if quartic(mean, p, d1) < 0:
            continue
        law = TwoPointLaw(p=p, d1=d1, mean=mean)
        if law.threshold >= d1:
            logging.info(f"Underestimation case p={p}: mean={mean:g} (2^{k} d1)")
            return law
    raise InvalidMoments(f"No mean up to d1 * 2^{max_doublings} satisfies the threshold for p={p}")


def two_point_lognormal_pd(law: TwoPointLaw) -> float:
    return lognormal_cdf(match_lognormal(law.moments()), law.d1)


def _firm_one_value(x: XosStructure, a1: float, a2: float) -> float:
    return float(value_arrays(x, a1, a2).v1[0])


def _solve_on_line(x: XosStructure, a2: float, target: float) -> Optional[float]:
    """a1 >= 0 with V1(a1, a2) = target, if V1(0, a2) <= target."""
    if _firm_one_value(x, 0.0, a2) > target:
        return None
    # V1(a1, a2) >= a1, so V1(target, a2) >= target brackets the root
    return optimize.brentq(lambda a1: _firm_one_value(x, a1, a2) - target, 0.0, target, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def realize_on_quadrant(x: XosStructure, law: TwoPointLaw, candidates: int = 32) -> ScenarioDistribution:
    """
    Asset scenarios with firm 1 values lo (weight p) and hi (weight 1 - p).

    The default atom is found on the a1-axis, where V1 runs continuously from 0
    upwards. The solvent atom is searched on horizontal lines a2 = d2 * (1 - j / candidates)
    and accepted once it classifies as ss.
    """
    if not math.isclose(law.d1, x.d1, rel_tol=1e-12):
        raise InfeasibleGeometry(f"Law threshold d1={law.d1} differs from the structure's d1={x.d1}")

    a1_default = _solve_on_line(x, 0.0, law.lo)
    default_atom = AssetScenario(a1_default, 0.0)
    default_area = SuzukiArea.from_code(int(value_arrays(x, default_atom.a1, default_atom.a2).area[0]))
    if not default_area.firm_defaults(1):
        raise InfeasibleGeometry(f"Default atom landed in {default_area.value}")

    for j in range(candidates + 1):
        a2 = x.d2 * (1 - j / candidates)
        a1_solvent = _solve_on_line(x, a2, law.hi)
        if a1_solvent is None:
            continue
        claims = value_arrays(x, a1_solvent, a2)
        if SuzukiArea.from_code(int(claims.area[0])) == SuzukiArea.SS:
            logging.info(f"Realized two-point law at ({a1_default:.6g}, 0) and ({a1_solvent:.6g}, {a2:.6g})")
            return ScenarioDistribution(
                atoms=(default_atom, AssetScenario(a1_solvent, a2)),
                weights=(law.p, 1 - law.p),
            )

    logging.error(f"No ss scenario with V1={law.hi} for {x}")
    raise InfeasibleGeometry(f"Level set V1={law.hi} does not meet the ss area")


def pushforward(dist: ScenarioDistribution, x: XosStructure, firm: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Firm values, weights and default flags of the atoms."""
    a1, a2, weights = dist.arrays()
    claims = value_arrays(x, a1, a2)
    return claims.firm_values(firm), weights, claims.defaults(firm)


def scenario_default_probability(dist: ScenarioDistribution, x: XosStructure, firm: int = 1) -> float:
    _, weights, defaulted = pushforward(dist, x, firm)
    return float(weights[defaulted].sum())


def scenario_lognormal_pd(dist: ScenarioDistribution, x: XosStructure, firm: int = 1) -> float:
    """PD of the lognormal matched to the exact moments of the atom distribution."""
    values, weights, _ = pushforward(dist, x, firm)
    mean = float(np.sum(weights * values))
    variance = float(np.sum(weights * values ** 2)) - mean ** 2
    d = x.d1 if firm == 1 else x.d2
    return lognormal_cdf(match_lognormal(MomentPair(mean=mean, variance=variance)), d)
