import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from models.distributions import MomentPair
from models.errors import InvalidMoments
from models.xos import AssetScenario

# Variances below this share of the second moment count as zero
SPREAD_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MixtureMoments:
    """
    Firm value moments as a mixture over the default region (weight p) and
    the solvent region (weight 1 - p):

        E_p(V)   = p * x1 + x2,  x1 = E(V | default) - E(V | solvent), x2 = E(V | solvent)
        E_p(V^2) = p * y1 + y2,  y1, y2 likewise for the second moment
    """

    p: float
    x1: float
    x2: float
    y1: float
    y2: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidMoments(f"p={self.p} is not a probability")
        if not (self.x1 < 0 and self.y1 < 0):
            raise InvalidMoments(f"x1 and y1 must be negative, got ({self.x1}, {self.y1})")
        if not (self.x2 > 0 and self.y2 > 0):
            raise InvalidMoments(f"x2 and y2 must be positive, got ({self.x2}, {self.y2})")

    @classmethod
    def from_conditionals(
        cls,
        p: float,
        mean_d: float,
        mean_s: float,
        second_d: float,
        second_s: float,
    ) -> "MixtureMoments":
        return cls(p=p, x1=mean_d - mean_s, x2=mean_s, y1=second_d - second_s, y2=second_s)

    def at(self, p: float) -> "MixtureMoments":
        return replace(self, p=p)

    def mean(self, p: Optional[float] = None) -> float:
        p = self.p if p is None else p
        return p * self.x1 + self.x2

    def second_moment(self, p: Optional[float] = None) -> float:
        p = self.p if p is None else p
        return p * self.y1 + self.y2

    def variance(self, p: Optional[float] = None) -> float:
        return self.second_moment(p) - self.mean(p) ** 2

    def is_nondegenerate(self) -> bool:
        """Positive mean and variance for every p in [0, 1]; the variance is concave in p, so the endpoints decide."""
        return self.mean(1.0) > 0 and self.has_spread_at(0.0) and self.has_spread_at(1.0)

    def has_spread_at(self, p: float) -> bool:
        return self.variance(p) > SPREAD_TOLERANCE * self.second_moment(p)

    def has_interior_spread(self) -> bool:
        """Positive mean and variance on the open interval (0, 1); two-point laws qualify."""
        return self.mean(1.0) > 0 and self.has_spread_at(0.5)

    def supports_threshold(self, d1: float) -> bool:
        return self.x2 >= d1 and self.y2 >= d1 ** 2


@dataclass(frozen=True)
class TwoPointLaw:
    """
    Firm value 0.5 * d1 with probability p (default) and hi otherwise,
    where hi is chosen so that the mean equals `mean`.
    """

    p: float
    d1: float
    mean: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidMoments(f"p={self.p} must lie in (0, 1)")
        if not self.hi > self.d1:
            raise InvalidMoments(f"Solvent value {self.hi} must exceed d1={self.d1}")

    @property
    def lo(self) -> float:
        return 0.5 * self.d1

    @property
    def hi(self) -> float:
        return (self.mean - 0.5 * self.p * self.d1) / (1 - self.p)

    @property
    def second_moment(self) -> float:
        return (0.25 * self.d1 ** 2 * self.p - self.d1 * self.p * self.mean + self.mean ** 2) / (1 - self.p)

    @property
    def threshold(self) -> float:
        """E(V)^2 / sqrt(E(V^2)); the matched lognormal PD is at most 0.5 iff d1 is at most this."""
        return self.mean ** 2 / math.sqrt(self.second_moment)

    def moments(self) -> MomentPair:
        return MomentPair(mean=self.mean, variance=self.second_moment - self.mean ** 2)

    def mixture_moments(self) -> MixtureMoments:
        return MixtureMoments.from_conditionals(
            p=self.p, mean_d=self.lo, mean_s=self.hi,
            second_d=self.lo ** 2, second_s=self.hi ** 2,
        )


@dataclass(frozen=True)
class ScenarioDistribution:
    """Finitely supported law of (A1, A2)."""

    atoms: Tuple[AssetScenario, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.atoms) != len(self.weights) or not self.atoms:
            raise InvalidMoments("Atoms and weights must be non-empty and of equal length")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-12):
            raise InvalidMoments(f"Weights must be non-negative and sum to 1, got {self.weights}")

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        a1 = np.array([atom.a1 for atom in self.atoms])
        a2 = np.array([atom.a2 for atom in self.atoms])
        return a1, a2, np.array(self.weights)


@dataclass(frozen=True)
class Crossings:
    """h(p) > p on [0, epsilon_hat) and h(p) < p on (epsilon_prime_hat, 1]."""

    epsilon_hat: float
    epsilon_prime_hat: float
