import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.xos import FRACTION_CEILING, XosType

# Log-variances of the study grid; coefficients of variation 0.1 ... 10
STUDY_SIGMA_SQ = (
    0.00995, 0.22314, 0.44629, 0.69315, 1.0, 1.17865,
    1.60944, 1.98100, 2.30259, 3.25810, 4.04743, 4.61512,
)


def study_fraction_grid() -> List[Tuple[float, float]]:
    steps = [round(0.1 * k, 10) for k in range(1, 10)]
    return [(f12, f21) for f12 in steps for f21 in steps]


def study_d_over_a_grid() -> List[float]:
    return [round(0.1 * k, 10) for k in range(1, 31)]


class SweepConfig(BaseModel):
    """Parameter grid of a relative-risk sweep."""

    model_config = ConfigDict(frozen=True)

    xos_type: XosType = Field(
        default=XosType.EQUITY_ONLY,
        description="Cross-ownership type; fraction pairs set the equity and/or debt fractions")
    fraction_grid: List[Tuple[float, float]] = Field(
        default_factory=study_fraction_grid,
        description="Cross-ownership fraction pairs (firm 1 holds of firm 2, firm 2 holds of firm 1)")
    d_over_a_grid: List[float] = Field(
        default_factory=study_d_over_a_grid,
        description="Face value of debt relative to expected exogenous assets, same for both firms")
    sigma_sq_grid: List[float] = Field(
        default_factory=lambda: list(STUDY_SIGMA_SQ),
        description="Log-variances of the exogenous assets")
    n_per_cell: int = Field(default=10_000, ge=1, description="Simulated scenarios per cell")
    seed: int = Field(default=0, ge=0, description="Root seed; each cell derives its own stream from it")
    rounding: int = Field(default=4, ge=0, le=12, description="Decimals of the rounded columns")
    a: float = Field(default=1.0, gt=0, description="Expected exogenous assets of each firm")
    sig12: float = Field(default=0.0, description="Log-scale covariance of the exogenous assets")
    workers: int = Field(default=1, ge=1, description="Worker processes")
    stream_size: int = Field(default=250_000, ge=1, description="Scenarios per random substream of a cell")

    @field_validator("fraction_grid")
    @classmethod
    def check_fractions(cls, grid: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if not grid:
            raise ValueError("fraction grid is empty")
        for pair in grid:
            if not all(0.0 <= f < FRACTION_CEILING for f in pair):
                raise ValueError(f"fractions {pair} must lie in [0, 1)")
        return grid

    @field_validator("d_over_a_grid", "sigma_sq_grid")
    @classmethod
    def check_positive_grid(cls, grid: List[float]) -> List[float]:
        if not grid:
            raise ValueError("grid is empty")
        if not all(v > 0 and math.isfinite(v) for v in grid):
            raise ValueError(f"grid values must be positive, got {grid}")
        return grid

    @model_validator(mode="after")
    def check_type(self) -> "SweepConfig":
        if self.xos_type == XosType.MIXED:
            raise ValueError("mixed cross-ownership cannot be swept from fraction pairs")
        if self.sig12 ** 2 > min(self.sigma_sq_grid) ** 2:
            raise ValueError(f"sig12={self.sig12} exceeds the smallest log-variance")
        return self

    @property
    def cell_count(self) -> int:
        return len(self.fraction_grid) * len(self.d_over_a_grid) * len(self.sigma_sq_grid)


@dataclass(frozen=True)
class SweepCell:
    grid_index: int
    ms12: float
    ms21: float
    md12: float
    md21: float
    d_over_a: float
    sigma_sq: float
    cv: float
    p_s: float
    p_l: float
    rr: float
    se_s: float
    p_s_rounded: float
    p_l_rounded: float
    rr_rounded: float

    def to_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row.pop("grid_index")
        return row


SWEEP_COLUMNS = [name for name in SweepCell.__dataclass_fields__ if name != "grid_index"]
