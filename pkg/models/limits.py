import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from models.distributions import LognormalSpec
from models.xos import XosType

# Default path of cross-ownership fractions approaching 1
LIMIT_FRACTION_PATH = tuple(1 - 10.0 ** -k for k in range(1, 7))

# Face values closer than this (relative) are treated as equal
EQUAL_DEBT_TOLERANCE = 1e-12


class DebtLimitCase(str, Enum):
    EQUAL = "equal"
    FIRM_ONE_SMALLER = "firm_one_smaller"
    FIRM_ONE_LARGER = "firm_one_larger"

    @classmethod
    def of(cls, d1: float, d2: float) -> "DebtLimitCase":
        if abs(d1 - d2) <= EQUAL_DEBT_TOLERANCE * max(d1, d2):
            return cls.EQUAL
        return cls.FIRM_ONE_SMALLER if d1 < d2 else cls.FIRM_ONE_LARGER


class LimitEstimation(str, Enum):
    OVER = "over"
    UNDER = "under"


@dataclass(frozen=True)
class DebtLimitDistribution:
    """Law of firm 1's value as debt cross-ownership fractions tend to 1."""

    case: DebtLimitCase
    d1: float
    d2: float
    pd_suzuki: float
    pd_lognormal: float
    matched: LognormalSpec
    # A1 + d2 for the equal and firm-one-larger cases
    shifted: Optional[LognormalSpec] = None
    description: str = ""


@dataclass(frozen=True)
class RegimeBoundary:
    """
    Band (d1_star, d1_star_star) of firm 1 face values in which the matched
    lognormal underestimates the limiting debt-only default probability.
    """

    mu: float
    sigma: float
    d2: float
    mu_tilde: float
    sigma_tilde: float
    d1_star: float
    d1_max: float
    d1_star_star: float
    lhs_max: float
    rhs: float

    @property
    def log_rhs(self) -> float:
        return self.sigma_tilde * self.mu - self.sigma * self.mu_tilde

    def log_lhs(self, d1):
        d1 = np.asarray(d1, dtype=float)
        return self.sigma_tilde * np.log(d1 - self.d2) - self.sigma * np.log(d1)

    def lhs(self, d1):
        return np.exp(self.log_lhs(d1))

    def bell_shape_ok(self, grid: np.ndarray) -> bool:
        """LHS rises up to d1_max and falls after it on the given grid (all points > d2)."""
        grid = np.sort(np.asarray(grid, dtype=float))
        values = self.log_lhs(grid)
        rising = np.diff(values[grid <= self.d1_max])
        falling = np.diff(values[grid >= self.d1_max])
        return bool(np.all(rising > 0) and np.all(falling < 0))


@dataclass(frozen=True)
class LimitPathPoint:
    fraction: float
    mu_tilde: float
    sigma_tilde: float
    p_lognormal: float
    p_suzuki: float
    se_suzuki: float
    variance_ratio: float


@dataclass
class AreaLimitReport:
    """Area membership of fixed scenarios along a fraction path versus the limit sets."""

    xos_type: XosType
    d1: float
    d2: float
    fractions: Tuple[float, ...]
    points: np.ndarray
    areas: np.ndarray
    limit_areas: np.ndarray
    on_boundary: np.ndarray
    monotone: bool
    notes: List[str] = field(default_factory=list)

    @property
    def converged(self) -> np.ndarray:
        """Points (off the limit boundaries) whose final membership equals the limit membership."""
        final = self.areas[-1]
        if self.xos_type == XosType.EQUITY_ONLY:
            matches = (final == 0) == (self.limit_areas == 0)
        else:
            matches = final == self.limit_areas
        return matches | self.on_boundary

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def membership_path(self, a1: float, a2: float) -> List[int]:
        distance = np.hypot(self.points[:, 0] - a1, self.points[:, 1] - a2)
        i = int(np.argmin(distance))
        if not math.isclose(distance[i], 0.0, abs_tol=1e-12):
            raise KeyError(f"({a1}, {a2}) is not a grid point")
        return [int(code) for code in self.areas[:, i]]
