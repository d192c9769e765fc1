from dataclasses import dataclass
from enum import Enum
from typing import Dict

from models.errors import InvalidScenario, InvalidXosStructure

# Fractions this close to 1 make 1/(1 - M*M) blow up.
FRACTION_CEILING = 1.0 - 1e-15


class XosType(str, Enum):
    EQUITY_ONLY = "equity"
    DEBT_ONLY = "debt"
    BOTH = "both"
    MIXED = "mixed"
    NONE = "none"


class SuzukiArea(str, Enum):
    """Solvency regime of the pair: first letter firm 1, second letter firm 2."""

    SS = "ss"
    SD = "sd"
    DS = "ds"
    DD = "dd"

    @classmethod
    def from_code(cls, code: int) -> "SuzukiArea":
        return AREA_ORDER[code]

    @property
    def code(self) -> int:
        return AREA_ORDER.index(self)

    def firm_defaults(self, firm: int) -> bool:
        return self.value[firm - 1] == "d"


# Integer codes used by the vectorized valuation
AREA_ORDER = (SuzukiArea.SS, SuzukiArea.SD, SuzukiArea.DS, SuzukiArea.DD)


@dataclass(frozen=True)
class XosStructure:
    """Cross-ownership fractions and zero-coupon face values of the two firms.

    ms12 is the fraction of firm 2's equity held by firm 1, md12 the fraction
    of firm 2's debt held by firm 1; ms21 and md21 the reverse holdings.
    """

    ms12: float = 0.0
    ms21: float = 0.0
    md12: float = 0.0
    md21: float = 0.0
    d1: float = 1.0
    d2: float = 1.0

    def __post_init__(self):
        for name in ("ms12", "ms21", "md12", "md21"):
            value = getattr(self, name)
            if not 0.0 <= value < FRACTION_CEILING:
                raise InvalidXosStructure(
                    f"{name}={value} must lie in [0, 1)")
        for name in ("d1", "d2"):
            value = getattr(self, name)
            if not value > 0.0:
                raise InvalidXosStructure(f"{name}={value} must be positive")
        # Raises for patterns outside the recognised types
        self.xos_type

    @classmethod
    def equity_only(cls, ms12: float, ms21: float, d1: float, d2: float) -> "XosStructure":
        return cls(ms12=ms12, ms21=ms21, d1=d1, d2=d2)

    @classmethod
    def debt_only(cls, md12: float, md21: float, d1: float, d2: float) -> "XosStructure":
        return cls(md12=md12, md21=md21, d1=d1, d2=d2)

    @classmethod
    def of_type(cls, xos_type: XosType, f12: float, f21: float, d1: float, d2: float) -> "XosStructure":
        """Build a structure with both equity and/or debt fractions set to (f12, f21)."""
        if xos_type == XosType.EQUITY_ONLY:
            return cls.equity_only(f12, f21, d1, d2)
        if xos_type == XosType.DEBT_ONLY:
            return cls.debt_only(f12, f21, d1, d2)
        if xos_type == XosType.BOTH:
            return cls(ms12=f12, ms21=f21, md12=f12, md21=f21, d1=d1, d2=d2)
        if xos_type == XosType.NONE:
            return cls(d1=d1, d2=d2)
        raise InvalidXosStructure(f"Cannot build a {xos_type.value} structure from two fractions")

    @property
    def xos_type(self) -> XosType:
        ms12, ms21, md12, md21 = self.ms12, self.ms21, self.md12, self.md21
        fractions = (ms12, ms21, md12, md21)
        positive = sum(f > 0 for f in fractions)
        if positive == 0:
            return XosType.NONE
        if min(ms12, ms21) > 0 and md12 == md21 == 0:
            return XosType.EQUITY_ONLY
        if min(md12, md21) > 0 and ms12 == ms21 == 0:
            return XosType.DEBT_ONLY
        if positive == 4:
            return XosType.BOTH
        if positive == 3:
            return XosType.MIXED
        if min(ms12, md21) > 0 and ms21 == md12 == 0:
            return XosType.MIXED
        if min(ms21, md12) > 0 and ms12 == md21 == 0:
            return XosType.MIXED
        raise InvalidXosStructure(
            f"Unsupported cross-ownership pattern ms=({ms12}, {ms21}), md=({md12}, {md21})")

    def to_dict(self) -> Dict[str, float]:
        return {
            "ms12": self.ms12, "ms21": self.ms21,
            "md12": self.md12, "md21": self.md21,
            "d1": self.d1, "d2": self.d2,
        }


@dataclass(frozen=True)
class AssetScenario:
    """Exogenous asset values of both firms at maturity."""

    a1: float
    a2: float

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0:
            raise InvalidScenario(f"Asset values must be non-negative, got ({self.a1}, {self.a2})")


@dataclass(frozen=True)
class ClaimVector:
    """Recovery values r, equity values s and firm values v of both firms."""

    r1: float
    r2: float
    s1: float
    s2: float
    v1: float
    v2: float
    area: SuzukiArea

    def to_dict(self) -> Dict[str, object]:
        return {
            "area": self.area.value,
            "r1": self.r1, "r2": self.r2,
            "s1": self.s1, "s2": self.s2,
            "v1": self.v1, "v2": self.v2,
        }

    def describe(self) -> str:
        return (f"area={self.area.value} r=({self.r1:g}, {self.r2:g}) "
                f"s=({self.s1:g}, {self.s2:g}) v=({self.v1:g}, {self.v2:g})")
