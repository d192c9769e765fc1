import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from models.distributions import LognormalSpec


def relative_risk(p_s: float, p_l: float) -> float:
    """Lognormal PD over Suzuki PD; 1 when both vanish, +inf when only the Suzuki PD does."""
    for name, value in (("p_s", p_s), ("p_l", p_l)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name}={value} is not a probability")
    if p_s > 0:
        return p_l / p_s
    return 1.0 if p_l == 0 else math.inf


@dataclass(frozen=True)
class PdEstimate:
    """Monte Carlo default probability with its standard error."""

    p: float
    se: float
    n: int

    @classmethod
    def from_count(cls, defaults: int, n: int) -> "PdEstimate":
        p = defaults / n
        return cls(p=p, se=math.sqrt(p * (1 - p) / n), n=n)


@dataclass(frozen=True)
class PdComparison:
    p_suzuki: float
    p_lognormal: float
    rr: float
    n: int
    se_suzuki: float
    matched: Optional[LognormalSpec] = None

    @classmethod
    def from_estimates(cls, suzuki: PdEstimate, p_lognormal: float, matched: Optional[LognormalSpec] = None) -> "PdComparison":
        return cls(
            p_suzuki=suzuki.p,
            p_lognormal=p_lognormal,
            rr=relative_risk(suzuki.p, p_lognormal),
            n=suzuki.n,
            se_suzuki=suzuki.se,
            matched=matched,
        )

    def rounded(self, decimals: int = 4) -> "PdComparison":
        """Presentation view: probabilities rounded, RR recomputed from the rounded values."""
        p_s = round(self.p_suzuki, decimals)
        p_l = round(self.p_lognormal, decimals)
        return PdComparison(
            p_suzuki=p_s,
            p_lognormal=p_l,
            rr=relative_risk(p_s, p_l),
            n=self.n,
            se_suzuki=self.se_suzuki,
            matched=self.matched,
        )

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result.pop("matched")
        return result


@dataclass(frozen=True)
class RegionProbability:
    """Probability of an asset region with an error bound (SE for Monte Carlo, absolute bound for quadrature)."""

    probability: float
    error: float
    method: str
