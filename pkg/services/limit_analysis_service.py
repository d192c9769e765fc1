import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from models.distributions import BivariateLognormalSpec, LognormalSpec, MomentPair
from models.errors import NoRoot
from models.limits import (
    LIMIT_FRACTION_PATH,
    AreaLimitReport,
    DebtLimitCase,
    DebtLimitDistribution,
    LimitEstimation,
    LimitPathPoint,
    RegimeBoundary,
)
from models.risk import RegionProbability
from models.xos import XosStructure, XosType
from services.default_risk_service import (
    MonteCarloPdEstimator,
    PdEstimatorInterface,
    compare_on_sample,
    pd_analytic_suzuki_limit_region,
)
from services.distribution_service import lognormal_cdf, match_lognormal, moments_from_samples
from services.valuation_service import DD, DS, SD, SS, classify_areas, value_arrays

BISECTION_RTOL = 4 * np.finfo(float).eps

# Below this sigma the crossing margin, of order sigma^3, is lost to rounding in the log terms
SIGMA_FLOOR = 1e-4


def _lognormal_mean_variance(mu: float, sigma_sq: float):
    mean = math.exp(mu + 0.5 * sigma_sq)
    return mean, math.expm1(sigma_sq) * mean ** 2


# Equity-only limit


def limit_pd_suzuki_equity(
    d1: float,
    d2: float,
    spec: BivariateLognormalSpec,
    firm: int = 1,
    method: str = "mc",
    n: int = 1_000_000,
    seed: int = 0,
    estimator: Optional[PdEstimatorInterface] = None,
) -> RegionProbability:
    """Limiting Suzuki PD under equity-only cross-ownership: P(a1 < d1, a1 + a2 <= d1 + d2)."""
    return pd_analytic_suzuki_limit_region(XosStructure(d1=d1, d2=d2), spec, firm=firm, method=method, n=n, seed=seed,
        estimator=estimator)


def equity_limit_path(
    d1: float,
    d2: float,
    spec: BivariateLognormalSpec,
    fractions: Sequence[float] = LIMIT_FRACTION_PATH,
    n: int = 1_000_000,
    seed: int = 0,
    firm: int = 1,
    estimator: Optional[PdEstimatorInterface] = None,
) -> List[LimitPathPoint]:
    """
    Matched lognormal along symmetric equity-only fractions, on one common sample.

    Args:
        d1, d2: Face values
        spec: Joint lognormal law of the exogenous assets
        fractions: Equity fractions used for both firms
        n: Sample size
        seed: Sample seed
        firm: Firm whose value is approximated
        estimator: Asset sampler (default: MonteCarloPdEstimator())

    Returns:
        One LimitPathPoint per fraction
    """
    logging.info(f"Equity limit path over {len(fractions)} fractions (n={n}, seed={seed})")
    sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
    points = []
    for fraction in fractions:
        x = XosStructure.equity_only(fraction, fraction, d1, d2)
        claims = value_arrays(x, sample.a1, sample.a2)
        comparison = compare_on_sample(x, claims, firm)
        values = claims.firm_values(firm)
        ratio = float(np.var(values, ddof=1) / np.mean(values) ** 2)
        points.append(LimitPathPoint(
            fraction=fraction,
            mu_tilde=comparison.matched.mu_tilde,
            sigma_tilde=comparison.matched.sig_tilde,
            p_lognormal=comparison.p_lognormal,
            p_suzuki=comparison.p_suzuki,
            se_suzuki=comparison.se_suzuki,
            variance_ratio=ratio,
        ))
        logging.debug(f"fraction={fraction}: mu~={points[-1].mu_tilde:.4f}, p_l={points[-1].p_lognormal:.3e}")
    return points


def limit_pd_lognormal_equity(
    x_path: Sequence[XosStructure],
    spec: BivariateLognormalSpec,
    firm: int = 1,
    n: int = 1_000_000,
    seed: int = 0,
    estimator: Optional[PdEstimatorInterface] = None,
) -> List[float]:
    """Matched-lognormal PDs for each structure of the path, all on one sample."""
    sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
    pds = []
    for x in x_path:
        claims = value_arrays(x, sample.a1, sample.a2)
        pds.append(compare_on_sample(x, claims, firm).p_lognormal)
    return pds


def limiting_variance_ratio(
    d1: float,
    d2: float,
    spec: BivariateLognormalSpec,
    n: int = 1_000_000,
    seed: int = 0,
    estimator: Optional[PdEstimatorInterface] = None,
) -> float:
    """Var(Z)/E(Z)^2 for Z = (A1 + A2 - d1 - d2) on {A1 + A2 >= d1 + d2}, else 0."""
    sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
    excess = sample.a1 + sample.a2 - d1 - d2
    z = np.where(excess >= 0, excess, 0.0)
    return float(np.var(z, ddof=1) / np.mean(z) ** 2)


# Debt-only limit


def debt_limit_distribution(
    d1: float,
    d2: float,
    spec: BivariateLognormalSpec,
    n: int = 1_000_000,
    seed: int = 0,
    estimator: Optional[PdEstimatorInterface] = None,
) -> DebtLimitDistribution:
    """
    Limiting law of firm 1's value under debt-only cross-ownership and its two PDs.

    Equal and firm-one-larger cases: A1 + d2, a lognormal shifted by d2.
    Firm-one-smaller case: A1 + d2 where A2 > d2 - d1, else A1 + A2 + d1;
    its moments come from a sample of size n.
    """
    case = DebtLimitCase.of(d1, d2)
    logging.info(f"Debt limit distribution for d=({d1}, {d2}): {case.value}")

    if case == DebtLimitCase.FIRM_ONE_SMALLER:
        sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
        values = np.where(sample.a2 > d2 - d1, sample.a1 + d2, sample.a1 + sample.a2 + d1)
        matched = match_lognormal(moments_from_samples(values))
        return DebtLimitDistribution(
            case=case, d1=d1, d2=d2,
            pd_suzuki=0.0,
            pd_lognormal=lognormal_cdf(matched, d1),
            matched=matched,
            description="A1 + d2 on {a2 > d2 - d1}, A1 + A2 + d1 on {a2 <= d2 - d1}",
        )

    mean, variance = _lognormal_mean_variance(spec.mu1, spec.sig1sq)
    shifted = LognormalSpec(mu_tilde=spec.mu1, sig_tilde_sq=spec.sig1sq, shift=d2)
    matched = match_lognormal(MomentPair(mean=mean + d2, variance=variance))
    pd_suzuki = 0.0 if case == DebtLimitCase.EQUAL else lognormal_cdf(shifted, d1)
    return DebtLimitDistribution(
        case=case, d1=d1, d2=d2,
        pd_suzuki=pd_suzuki,
        pd_lognormal=lognormal_cdf(matched, d1),
        matched=matched,
        shifted=shifted,
        description="A1 + d2",
    )


def regime_boundary(mu: float, sigma: float, d2: float) -> RegimeBoundary:
    """
    Roots d1_star < d1_max < d1_star_star of (d1 - d2)^sig~ / d1^sig = exp(sig~ mu - sig mu~).

    The lognormal (mu~, sig~) is matched to E(A1) + d2 and Var(A1) for
    A1 ~ LN(mu, sigma^2). Both roots are bracketed and bisected in
    u = ln(d1 - d2), where the equation has bounded slope. Volatilities
    below SIGMA_FLOOR are rejected with ValueError.
    """
    if sigma <= 0 or d2 <= 0:
        raise ValueError(f"sigma and d2 must be positive, got ({sigma}, {d2})")
    if sigma < SIGMA_FLOOR:
        raise ValueError(f"sigma={sigma} is below the supported floor {SIGMA_FLOOR}")

    mean, variance = _lognormal_mean_variance(mu, sigma ** 2)
    matched = match_lognormal(MomentPair(mean=mean + d2, variance=variance))
    mu_t, sig_t = matched.mu_tilde, matched.sig_tilde

    log_rhs = sig_t * mu - sigma * mu_t
    d1_max = sigma / (sigma - sig_t) * d2
    log_lhs_max = sig_t * math.log(sig_t * d2 / (sigma - sig_t)) - sigma * math.log(sigma * d2 / (sigma - sig_t))
    if not log_lhs_max > log_rhs:
        logging.error(f"No crossing: log LHS_max={log_lhs_max} <= log RHS={log_rhs}")
        raise NoRoot(f"LHS never exceeds RHS for mu={mu}, sigma={sigma}, d2={d2}")

    log_d2 = math.log(d2)

    def excess(u: float) -> float:
        return sig_t * u - sigma * np.logaddexp(log_d2, u) - log_rhs

    u_max = math.log(sig_t * d2 / (sigma - sig_t))

    def bracket(direction: int) -> float:
        step = 1.0
        for _ in range(200):
            u = u_max + direction * step
            if excess(u) < 0:
                return u
            step *= 2
        raise NoRoot(f"No sign change found on the {'left' if direction < 0 else 'right'} of d1_max")

    try:
        u_star = optimize.bisect(excess, bracket(-1), u_max, xtol=1e-14, rtol=BISECTION_RTOL, maxiter=500)
        u_star_star = optimize.bisect(excess, u_max, bracket(1), xtol=1e-14, rtol=BISECTION_RTOL, maxiter=500)
    except ValueError as e:
        logging.error(f"Error bracketing regime boundary: {e}")
        raise NoRoot(str(e)) from e

    boundary = RegimeBoundary(
        mu=mu, sigma=sigma, d2=d2,
        mu_tilde=mu_t, sigma_tilde=sig_t,
        d1_star=d2 + math.exp(u_star),
        d1_max=d1_max,
        d1_star_star=d2 + math.exp(u_star_star),
        lhs_max=math.exp(log_lhs_max),
        rhs=math.exp(log_rhs),
    )
    logging.info(
        f"Regime boundary: d1*={boundary.d1_star:.6g}, d1_max={d1_max:.6g}, d1**={boundary.d1_star_star:.6g}")
    return boundary


def classify_limit_estimation(d1: float, rb: RegimeBoundary) -> LimitEstimation:
    """Under inside (d1_star, d1_star_star), over elsewhere (including d1 <= d2)."""
    if rb.d1_star < d1 < rb.d1_star_star:
        return LimitEstimation.UNDER
    return LimitEstimation.OVER


# Area limits


def _limit_areas(xos_type: XosType, d1: float, d2: float, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    if xos_type == XosType.EQUITY_ONLY:
        return np.where(a1 + a2 >= d1 + d2, SS, DD).astype(np.int8)

    positive = (a1 + a2) > 0
    in_sd = positive & (d2 >= d1) & (a2 <= d2 - d1)
    in_ds = positive & (d1 >= d2) & (a1 <= d1 - d2) & ~in_sd
    return np.select([~positive, in_sd, in_ds], [DD, SD, DS], default=SS).astype(np.int8)


def _on_limit_boundary(xos_type: XosType, d1: float, d2: float, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    scale = 1e-9 * max(d1, d2)
    if xos_type == XosType.EQUITY_ONLY:
        return np.abs(a1 + a2 - d1 - d2) <= scale
    near = np.zeros(a1.shape, dtype=bool)
    if d2 > d1:
        near |= np.abs(a2 - (d2 - d1)) <= scale
    if d1 > d2:
        near |= np.abs(a1 - (d1 - d2)) <= scale
    return near


def verify_area_limits(
    d1: float,
    d2: float,
    fraction_path: Sequence[float] = LIMIT_FRACTION_PATH,
    xos_type: XosType = XosType.EQUITY_ONLY,
    points: Optional[np.ndarray] = None,
    grid_n: int = 25,
) -> AreaLimitReport:
    """
    Track the Suzuki area of fixed scenarios along a fraction path towards 1.

    Equity-only paths are compared with the limit set {a1 + a2 >= d1 + d2} of
    the ss area; debt-only paths with the four limit areas. Membership must be
    monotone: equity ss never lost, debt dd never regained.
    """
    if xos_type not in (XosType.EQUITY_ONLY, XosType.DEBT_ONLY):
        raise ValueError(f"Area limits are defined for equity-only or debt-only paths, got {xos_type.value}")
    fractions = tuple(fraction_path)
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fraction_path must be strictly increasing")

    if points is None:
        axis = np.linspace(0.0, 2.0 * (d1 + d2), grid_n)
        grid_a1, grid_a2 = np.meshgrid(axis, axis, indexing="ij")
        points = np.column_stack([grid_a1.ravel(), grid_a2.ravel()])
    points = np.asarray(points, dtype=float)
    a1, a2 = points[:, 0], points[:, 1]

    areas = np.vstack([
        classify_areas(XosStructure.of_type(xos_type, f, f, d1, d2), a1, a2) for f in fractions
    ])
    if xos_type == XosType.EQUITY_ONLY:
        in_ss = areas == SS
        monotone = bool(np.all(in_ss[1:] >= in_ss[:-1]))
    else:
        in_dd = areas == DD
        monotone = bool(np.all(in_dd[1:] <= in_dd[:-1]))

    report = AreaLimitReport(
        xos_type=xos_type,
        d1=d1,
        d2=d2,
        fractions=fractions,
        points=points,
        areas=areas,
        limit_areas=_limit_areas(xos_type, d1, d2, a1, a2),
        on_boundary=_on_limit_boundary(xos_type, d1, d2, a1, a2),
        monotone=monotone,
    )
    if not report.all_converged:
        report.notes.append(f"{int(np.count_nonzero(~report.converged))} points not yet in their limit area")
    logging.info(
        f"Area limits ({xos_type.value}, d=({d1}, {d2})): monotone={monotone}, converged={report.all_converged}")
    return report
