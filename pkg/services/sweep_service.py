import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.distributions import BivariateLognormalSpec
from models.errors import DegenerateVariance
from models.risk import PdComparison, relative_risk
from models.sweep import SWEEP_COLUMNS, SweepCell, SweepConfig
from models.xos import AREA_ORDER, XosStructure, XosType
from services.default_risk_service import MonteCarloPdEstimator, PdEstimatorInterface, compare_on_sample
from services.distribution_service import coefficient_of_variation, lognormal_cdf
from services.valuation_service import value_arrays

# Grid point: (grid index, fraction 1->2, fraction 2->1, d/a, sigma^2)
GridPoint = Tuple[int, float, float, float, float]

TYPE_CODES = {XosType.NONE: 0, XosType.EQUITY_ONLY: 1, XosType.DEBT_ONLY: 2, XosType.BOTH: 3}


def grid_points(cfg: SweepConfig) -> List[GridPoint]:
    points = []
    index = 0
    for f12, f21 in cfg.fraction_grid:
        for d_over_a in cfg.d_over_a_grid:
            for sigma_sq in cfg.sigma_sq_grid:
                points.append((index, f12, f21, d_over_a, sigma_sq))
                index += 1
    return points


def cell_seed(root_seed: int, xos_type: XosType, f12: float, f21: float, d_over_a: float, sigma_sq: float) -> int:
    """Seed derived from the cell's parameters, so a cell's values do not depend on its grid position."""
    key = tuple(int(round(v * 1e9)) for v in (f12, f21, d_over_a, sigma_sq)) + (TYPE_CODES[xos_type],)
    state = np.random.SeedSequence(root_seed, spawn_key=key).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _nan_safe_rr(p_s: float, p_l: float) -> float:
    return math.nan if math.isnan(p_l) else relative_risk(p_s, p_l)


def run_cell(cfg: SweepConfig, point: GridPoint) -> SweepCell:
    index, f12, f21, d_over_a, sigma_sq = point
    d = d_over_a * cfg.a
    x = XosStructure.of_type(cfg.xos_type, f12, f21, d, d)
    spec = BivariateLognormalSpec.from_asset_level(cfg.a, sigma_sq, cfg.sig12)
    seed = cell_seed(cfg.seed, cfg.xos_type, f12, f21, d_over_a, sigma_sq)
    sample = MonteCarloPdEstimator(stream_size=cfg.stream_size).sample(spec, cfg.n_per_cell, seed)
    claims = value_arrays(x, sample.a1, sample.a2)

    try:
        comparison = compare_on_sample(x, claims, firm=1)
        p_s, p_l, se = comparison.p_suzuki, comparison.p_lognormal, comparison.se_suzuki
    except DegenerateVariance as e:
        logging.warning(f"Cell {index}: no lognormal match ({e})")
        defaults = claims.defaults(1)
        p_s = float(np.mean(defaults))
        p_l = math.nan
        se = math.sqrt(p_s * (1 - p_s) / cfg.n_per_cell)

    p_s_rounded = round(p_s, cfg.rounding)
    p_l_rounded = p_l if math.isnan(p_l) else round(p_l, cfg.rounding)
    return SweepCell(
        grid_index=index,
        ms12=x.ms12, ms21=x.ms21, md12=x.md12, md21=x.md21,
        d_over_a=d_over_a,
        sigma_sq=sigma_sq,
        cv=coefficient_of_variation(sigma_sq),
        p_s=p_s,
        p_l=p_l,
        rr=_nan_safe_rr(p_s, p_l),
        se_s=se,
        p_s_rounded=p_s_rounded,
        p_l_rounded=p_l_rounded,
        rr_rounded=_nan_safe_rr(p_s_rounded, p_l_rounded),
    )


def _run_cell_job(job: Tuple[SweepConfig, GridPoint]) -> SweepCell:
    return run_cell(*job)


def sweep_cells(cfg: SweepConfig, workers: Optional[int] = None) -> List[SweepCell]:
    """
    Evaluate every grid cell of the sweep.

    Args:
        cfg: Sweep configuration
        workers: Worker processes (defaults to cfg.workers)

    Returns:
        Cells sorted by grid index
    """
    workers = workers or cfg.workers
    points = grid_points(cfg)
    logging.info(f"Running sweep: {len(points)} cells, n={cfg.n_per_cell}, workers={workers}")

    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                jobs = [(cfg, point) for point in points]
                cells = list(pool.map(_run_cell_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            cells = [run_cell(cfg, point) for point in points]
    except Exception as e:
        logging.error(f"Error during sweep: {e}")
        raise

    logging.info("Sweep completed")
    return sorted(cells, key=lambda cell: cell.grid_index)


def cells_to_frame(cells: Iterable[SweepCell]) -> pd.DataFrame:
    return pd.DataFrame([cell.to_row() for cell in cells], columns=SWEEP_COLUMNS)


def run_sweep(cfg: SweepConfig, workers: Optional[int] = None) -> pd.DataFrame:
    return cells_to_frame(sweep_cells(cfg, workers))


def write_csv(frame: pd.DataFrame, path) -> None:
    """Comma-separated, '.' decimal point, LF line endings, no index."""
    frame.to_csv(path, index=False, lineterminator="\n")


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


@dataclass
class CdfComparisonData:
    """Empirical CDF of firm 1's value and its matched lognormal CDF, per face value."""

    cdf_xos: pd.DataFrame
    cdf_lognormal: pd.DataFrame
    comparisons: Dict[float, PdComparison]

    def write(self, stem: str) -> Tuple[str, str]:
        xos_path, lognormal_path = f"{stem}_xos_cdf.csv", f"{stem}_lognormal_cdf.csv"
        write_csv(self.cdf_xos, xos_path)
        write_csv(self.cdf_lognormal, lognormal_path)
        return xos_path, lognormal_path


def emit_cdf_comparison(
    xos_type: XosType,
    d_grid: Sequence[float],
    seed: int,
    sigma_sq: float = 1.0,
    fraction: float = 0.95,
    n: int = 100_000,
    a: float = 1.0,
    quantile_points: int = 199,
    estimator: Optional[PdEstimatorInterface] = None,
) -> CdfComparisonData:
    """
    CDF tables of firm 1's value at symmetric fractions, one block per face value.

    All face values share one asset sample. The CDFs are evaluated at the
    empirical quantiles of the firm value on an evenly spaced level grid.
    """
    spec = BivariateLognormalSpec.from_asset_level(a, sigma_sq)
    sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
    levels = np.linspace(0.005, 0.995, quantile_points)

    xos_blocks, lognormal_blocks, comparisons = [], [], {}
    for d in d_grid:
        x = XosStructure.of_type(xos_type, fraction, fraction, d, d)
        claims = value_arrays(x, sample.a1, sample.a2)
        comparison = compare_on_sample(x, claims, firm=1)
        comparisons[d] = comparison

        values = np.sort(claims.v1)
        q = np.quantile(values, levels)
        xos_blocks.append(pd.DataFrame({
            "d": d, "q": q,
            "cdf_xos": np.searchsorted(values, q, side="right") / n,
            "p_s": comparison.p_suzuki,
            "se_s": comparison.se_suzuki,
        }))
        lognormal_blocks.append(pd.DataFrame({
            "d": d, "q": q,
            "cdf_lognormal": lognormal_cdf(comparison.matched, q),
            "p_l": comparison.p_lognormal,
            "rr": comparison.rr,
        }))
        logging.info(f"CDF comparison d={d}: p_s={comparison.p_suzuki:.5f}, p_l={comparison.p_lognormal:.5f}")

    return CdfComparisonData(
        cdf_xos=pd.concat(xos_blocks, ignore_index=True),
        cdf_lognormal=pd.concat(lognormal_blocks, ignore_index=True),
        comparisons=comparisons,
    )


def emit_scatter(
    x: XosStructure,
    spec: BivariateLognormalSpec,
    n: int,
    seed: int,
    estimator: Optional[PdEstimatorInterface] = None,
) -> pd.DataFrame:
    """Firm values of both firms with the Suzuki area of each scenario."""
    sample = (estimator or MonteCarloPdEstimator()).sample(spec, n, seed)
    claims = value_arrays(x, sample.a1, sample.a2)
    labels = np.array([area.value for area in AREA_ORDER])
    frame = pd.DataFrame({"v1": claims.v1, "v2": claims.v2, "area": labels[claims.area]})
    logging.info(f"Scatter: {n} rows, strata {frame['area'].value_counts().to_dict()}")
    return frame
