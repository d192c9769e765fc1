import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from models.errors import InvalidCovariance, InvalidMoments
from models.xos import AssetScenario


@dataclass(frozen=True)
class BivariateLognormalSpec:
    """(A1, A2) = exp(N((mu1, mu2), [[sig1sq, sig12], [sig12, sig2sq]]))."""

    mu1: float
    mu2: float
    sig1sq: float
    sig2sq: float
    sig12: float = 0.0

    def __post_init__(self):
        if not (self.sig1sq > 0 and self.sig2sq > 0):
            raise InvalidCovariance(
                f"Log-scale variances must be positive, got ({self.sig1sq}, {self.sig2sq})")
        if self.sig12 ** 2 > self.sig1sq * self.sig2sq * (1 + 1e-12):
            raise InvalidCovariance(
                f"Covariance {self.sig12} exceeds sqrt({self.sig1sq} * {self.sig2sq})")

    @classmethod
    def from_asset_level(cls, a: float = 1.0, sigma_sq: float = 1.0, sig12: float = 0.0) -> "BivariateLognormalSpec":
        """Both firms with expected exogenous assets a and log-variance sigma_sq."""
        mu = -0.5 * sigma_sq + math.log(a)
        return cls(mu1=mu, mu2=mu, sig1sq=sigma_sq, sig2sq=sigma_sq, sig12=sig12)

    def swapped(self) -> "BivariateLognormalSpec":
        return BivariateLognormalSpec(self.mu2, self.mu1, self.sig2sq, self.sig1sq, self.sig12)


@dataclass(frozen=True)
class LognormalSpec:
    """Lognormal law of shift + exp(N(mu_tilde, sig_tilde_sq))."""

    mu_tilde: float
    sig_tilde_sq: float
    shift: float = 0.0

    def __post_init__(self):
        if not self.sig_tilde_sq > 0:
            raise InvalidMoments(f"sig_tilde_sq must be positive, got {self.sig_tilde_sq}")
        if self.shift < 0:
            raise InvalidMoments(f"shift must be non-negative, got {self.shift}")

    @property
    def sig_tilde(self) -> float:
        return math.sqrt(self.sig_tilde_sq)


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float

    def __post_init__(self):
        if not (self.mean > 0 and self.variance > 0):
            raise InvalidMoments(
                f"Moments need positive mean and variance, got ({self.mean}, {self.variance})")
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidMoments(f"Moments must be finite, got ({self.mean}, {self.variance})")

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean ** 2


@dataclass(frozen=True)
class AssetSample:
    """Column-wise sample of asset scenarios."""

    a1: np.ndarray
    a2: np.ndarray

    def __len__(self) -> int:
        return len(self.a1)

    def __getitem__(self, i: int) -> AssetScenario:
        return AssetScenario(float(self.a1[i]), float(self.a2[i]))

    def __iter__(self) -> Iterator[AssetScenario]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def concat(cls, parts) -> "AssetSample":
        parts = list(parts)
        return cls(np.concatenate([p.a1 for p in parts]), np.concatenate([p.a2 for p in parts]))
