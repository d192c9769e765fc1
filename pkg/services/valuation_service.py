import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.errors import NonConvergence, WrongXosType
from models.xos import AREA_ORDER, AssetScenario, ClaimVector, SuzukiArea, XosStructure, XosType

SS, SD, DS, DD = (area.code for area in AREA_ORDER)


@dataclass(frozen=True)
class ClaimArrays:
    """Vectorized claim values; one entry per asset scenario."""

    r1: np.ndarray
    r2: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    area: np.ndarray

    @property
    def v1(self) -> np.ndarray:
        return self.r1 + self.s1

    @property
    def v2(self) -> np.ndarray:
        return self.r2 + self.s2

    def firm_values(self, firm: int) -> np.ndarray:
        return self.v1 if firm == 1 else self.v2

    def defaults(self, firm: int) -> np.ndarray:
        return default_mask(self.area, firm)

    def at(self, i: int) -> ClaimVector:
        return ClaimVector(
            r1=float(self.r1[i]), r2=float(self.r2[i]),
            s1=float(self.s1[i]), s2=float(self.s2[i]),
            v1=float(self.v1[i]), v2=float(self.v2[i]),
            area=SuzukiArea.from_code(int(self.area[i])),
        )


def _as_arrays(a1, a2) -> Tuple[np.ndarray, np.ndarray]:
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    a2 = np.atleast_1d(np.asarray(a2, dtype=float))
    return np.broadcast_arrays(a1, a2)


def _check_firm(firm: int) -> None:
    if firm not in (1, 2):
        raise ValueError(f"firm must be 1 or 2, got {firm}")


def default_mask(area: np.ndarray, firm: int) -> np.ndarray:
    """Firm 1 defaults on ds and dd, firm 2 on sd and dd."""
    _check_firm(firm)
    if firm == 1:
        return (area == DS) | (area == DD)
    return (area == SD) | (area == DD)


def area_memberships(x: XosStructure, a1, a2) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate each area's defining inequalities independently (ss, sd, ds, dd)."""
    a1, a2 = _as_arrays(a1, a2)
    ms12, ms21, md12, md21, d1, d2 = x.ms12, x.ms21, x.md12, x.md21, x.d1, x.d2

    # Thresholds of the two solvency tests used by each area
    equity_test_1 = a1 + ms12 * a2 >= (1 - ms12 * md21) * d1 + (ms12 - md12) * d2
    equity_test_2 = ms21 * a1 + a2 >= (ms21 - md21) * d1 + (1 - ms21 * md12) * d2
    debt_test_1 = a1 + md12 * a2 >= (1 - md12 * md21) * d1
    debt_test_2 = md21 * a1 + a2 >= (1 - md12 * md21) * d2

    ss = equity_test_1 & equity_test_2
    sd = debt_test_1 & ~equity_test_2
    ds = ~equity_test_1 & debt_test_2
    dd = ~debt_test_1 & ~debt_test_2
    return ss, sd, ds, dd


def classify_areas(x: XosStructure, a1, a2) -> np.ndarray:
    """Area codes (0=ss, 1=sd, 2=ds, 3=dd), decided in the order ss, sd, ds, dd."""
    ss, sd, ds, _ = area_memberships(x, a1, a2)
    return np.select([ss, sd, ds], [SS, SD, DS], default=DD).astype(np.int8)


def value_arrays(x: XosStructure, a1, a2) -> ClaimArrays:
    """Closed-form recovery and equity values for every scenario in (a1, a2)."""
    a1, a2 = _as_arrays(a1, a2)
    ms12, ms21, md12, md21, d1, d2 = x.ms12, x.ms21, x.md12, x.md21, x.d1, x.d2
    area = classify_areas(x, a1, a2)

    den_ss = 1 - ms12 * ms21
    den_sd = 1 - ms21 * md12
    den_ds = 1 - ms12 * md21
    den_dd = 1 - md12 * md21

    in_ss, in_sd, in_ds, in_dd = (area == SS), (area == SD), (area == DS), (area == DD)

    r1 = np.select(
        [in_ds, in_dd],
        [(a1 + ms12 * a2 + (md12 - ms12) * d2) / den_ds,
         (a1 + md12 * a2) / den_dd],
        default=d1,
    )
    r2 = np.select(
        [in_sd, in_dd],
        [(ms21 * a1 + a2 + (md21 - ms21) * d1) / den_sd,
         (md21 * a1 + a2) / den_dd],
        default=d2,
    )
    s1 = np.select(
        [in_ss, in_sd],
        [(a1 + ms12 * a2 + (ms12 * md21 - 1) * d1 + (md12 - ms12) * d2) / den_ss,
         (a1 + md12 * a2 + (md12 * md21 - 1) * d1) / den_sd],
        default=0.0,
    )
    s2 = np.select(
        [in_ss, in_ds],
        [(ms21 * a1 + a2 + (md21 - ms21) * d1 + (ms21 * md12 - 1) * d2) / den_ss,
         (md21 * a1 + a2 + (md12 * md21 - 1) * d2) / den_ds],
        default=0.0,
    )

    # Rounding can push boundary values a few ulps outside their ranges
    return ClaimArrays(
        r1=np.clip(r1, 0.0, d1),
        r2=np.clip(r2, 0.0, d2),
        s1=np.maximum(s1, 0.0),
        s2=np.maximum(s2, 0.0),
        area=area,
    )


def classify_area(x: XosStructure, sc: AssetScenario) -> SuzukiArea:
    return SuzukiArea.from_code(int(classify_areas(x, sc.a1, sc.a2)[0]))


def value_closed_form(x: XosStructure, sc: AssetScenario) -> ClaimVector:
    return value_arrays(x, sc.a1, sc.a2).at(0)


def iterate_claims(
    x: XosStructure,
    a1,
    a2,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> Tuple[ClaimArrays, int]:
    """
    Solve r = min(d, a + Md r + Ms s), s = (a + Md r + Ms s - d)+ by Picard iteration.

    Args:
        x: Cross-ownership structure
        a1, a2: Exogenous asset values (scalars or arrays)
        tol: Sup-norm change at which the iterate is accepted
        max_iter: Iteration budget

    Returns:
        The fixed point and the number of updates until the iterate stopped changing
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a1, a2 = _as_arrays(a1, a2)
    ms12, ms21, md12, md21, d1, d2 = x.ms12, x.ms21, x.md12, x.md21, x.d1, x.d2

    r1 = np.zeros_like(a1)
    r2 = np.zeros_like(a1)
    s1 = np.zeros_like(a1)
    s2 = np.zeros_like(a1)

    for iteration in range(1, max_iter + 1):
        total_1 = a1 + md12 * r2 + ms12 * s2
        total_2 = a2 + md21 * r1 + ms21 * s1
        new_r1, new_r2 = np.minimum(d1, total_1), np.minimum(d2, total_2)
        new_s1, new_s2 = np.maximum(total_1 - d1, 0.0), np.maximum(total_2 - d2, 0.0)

        change = max(
            np.max(np.abs(new_r1 - r1)), np.max(np.abs(new_r2 - r2)),
            np.max(np.abs(new_s1 - s1)), np.max(np.abs(new_s2 - s2)),
        )
        r1, r2, s1, s2 = new_r1, new_r2, new_s1, new_s2
        if change <= tol:
            logging.debug(f"Fixed point reached after {iteration - 1} updates")
            area = _area_from_defaults(r1 + s1 < d1, r2 + s2 < d2)
            return ClaimArrays(r1=r1, r2=r2, s1=s1, s2=s2, area=area), iteration - 1

    logging.error(f"Fixed-point iteration did not converge within {max_iter} iterations (tol={tol})")
    raise NonConvergence(f"No convergence within {max_iter} iterations at tol={tol}")


def _area_from_defaults(default_1: np.ndarray, default_2: np.ndarray) -> np.ndarray:
    return (2 * default_1.astype(np.int8) + default_2.astype(np.int8)).astype(np.int8)


def value_fixed_point(
    x: XosStructure,
    sc: AssetScenario,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> ClaimVector:
    claims, _ = iterate_claims(x, sc.a1, sc.a2, tol=tol, max_iter=max_iter)
    return claims.at(0)


def firm_values_equity_only(x: XosStructure, a1, a2) -> np.ndarray:
    """Firm 1 value under equity-only cross-ownership."""
    if x.xos_type != XosType.EQUITY_ONLY:
        raise WrongXosType(f"Equity-only valuation needs an equity-only structure, got {x.xos_type.value}")
    a1, a2 = _as_arrays(a1, a2)
    ms12, ms21, d1, d2 = x.ms12, x.ms21, x.d1, x.d2
    area = classify_areas(x, a1, a2)
    return np.select(
        [area == SS, area == DS],
        [(a1 + ms12 * a2 - ms12 * ms21 * d1 - ms12 * d2) / (1 - ms12 * ms21),
         a1 + ms12 * a2 - ms12 * d2],
        default=a1,
    )


def firm_values_debt_only(x: XosStructure, a1, a2) -> np.ndarray:
    """Firm 1 value under debt-only cross-ownership."""
    if x.xos_type != XosType.DEBT_ONLY:
        raise WrongXosType(f"Debt-only valuation needs a debt-only structure, got {x.xos_type.value}")
    a1, a2 = _as_arrays(a1, a2)
    md12, md21, d1, d2 = x.md12, x.md21, x.d1, x.d2
    area = classify_areas(x, a1, a2)
    return np.select(
        [area == SD, area == DD],
        [a1 + md12 * a2 + md12 * md21 * d1,
         (a1 + md12 * a2) / (1 - md12 * md21)],
        default=a1 + md12 * d2,
    )


def firm_value_equity_only(x: XosStructure, sc: AssetScenario) -> float:
    return float(firm_values_equity_only(x, sc.a1, sc.a2)[0])


def firm_value_debt_only(x: XosStructure, sc: AssetScenario) -> float:
    return float(firm_values_debt_only(x, sc.a1, sc.a2)[0])


def is_default(x: XosStructure, sc: AssetScenario, firm: int) -> bool:
    _check_firm(firm)
    return classify_area(x, sc).firm_defaults(firm)


def default_region_equity_only(x: XosStructure, sc: AssetScenario) -> bool:
    """Firm 1 default region under equity-only ownership: a1 < d1 and a2 < d2 + (d1 - a1)/ms12."""
    if x.xos_type != XosType.EQUITY_ONLY:
        raise WrongXosType(f"Equity default region needs an equity-only structure, got {x.xos_type.value}")
    return sc.a1 < x.d1 and sc.a2 < x.d2 + (x.d1 - sc.a1) / x.ms12


def merton_claims(d: float, a) -> Tuple[np.ndarray, np.ndarray]:
    """Single-firm payoffs: debt recovers min(d, a), equity gets (a - d)+."""
    a = np.asarray(a, dtype=float)
    return np.minimum(d, a), np.maximum(a - d, 0.0)
