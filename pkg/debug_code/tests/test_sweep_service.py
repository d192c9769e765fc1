import math

import numpy as np
import pandas as pd
import pytest

from models.sweep import SWEEP_COLUMNS, SweepConfig
from models.xos import XosStructure, XosType
from services.default_risk_service import MonteCarloPdEstimator
from services.sweep_service import (
    cell_seed,
    emit_cdf_comparison,
    emit_scatter,
    frame_to_csv_text,
    grid_points,
    run_sweep,
    write_csv,
)


@pytest.fixture
def small_config() -> SweepConfig:
    return SweepConfig(
        xos_type=XosType.EQUITY_ONLY,
        fraction_grid=[(0.2, 0.5), (0.9, 0.9)],
        d_over_a_grid=[0.7, 1.3],
        sigma_sq_grid=[0.22314, 1.0],
        n_per_cell=2_000,
        seed=3,
    )


def test_grid_points_are_indexed_in_order(small_config):
    points = grid_points(small_config)
    assert [p[0] for p in points] == list(range(8))
    assert points[0][1:] == (0.2, 0.5, 0.7, 0.22314)
    assert points[-1][1:] == (0.9, 0.9, 1.3, 1.0)


def test_cell_seed_depends_on_parameters_only():
    seed = cell_seed(0, XosType.EQUITY_ONLY, 0.5, 0.5, 1.0, 1.0)
    assert seed == cell_seed(0, XosType.EQUITY_ONLY, 0.5, 0.5, 1.0, 1.0)
    assert seed != cell_seed(1, XosType.EQUITY_ONLY, 0.5, 0.5, 1.0, 1.0)
    assert seed != cell_seed(0, XosType.DEBT_ONLY, 0.5, 0.5, 1.0, 1.0)
    assert seed != cell_seed(0, XosType.EQUITY_ONLY, 0.5, 0.4, 1.0, 1.0)


def test_sweep_is_reproducible(small_config):
    first = frame_to_csv_text(run_sweep(small_config))
    second = frame_to_csv_text(run_sweep(small_config))
    assert first == second
    assert "\r" not in first
    assert first.splitlines()[0] == ",".join(SWEEP_COLUMNS)


def test_sweep_columns_and_rounding(small_config):
    frame = run_sweep(small_config)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == small_config.cell_count
    assert (frame["md12"] == 0).all() and (frame["ms12"] > 0).all()
    np.testing.assert_allclose(frame["p_s_rounded"], frame["p_s"].round(4))
    np.testing.assert_allclose(frame["se_s"], np.sqrt(frame["p_s"] * (1 - frame["p_s"]) / 2_000))
    np.testing.assert_allclose(frame["cv"], np.sqrt(np.exp(frame["sigma_sq"]) - 1))


def test_cell_values_do_not_depend_on_grid_order(small_config):
    reordered = small_config.model_copy(update={
        "fraction_grid": list(reversed(small_config.fraction_grid)),
        "sigma_sq_grid": list(reversed(small_config.sigma_sq_grid)),
    })
    key = ["ms12", "ms21", "d_over_a", "sigma_sq"]
    original = run_sweep(small_config).sort_values(key).reset_index(drop=True)
    shuffled = run_sweep(reordered).sort_values(key).reset_index(drop=True)
    pd.testing.assert_frame_equal(original, shuffled)


def test_sweep_does_not_depend_on_workers(small_config):
    pd.testing.assert_frame_equal(run_sweep(small_config, workers=1), run_sweep(small_config, workers=2))


def test_single_scenario_cell_has_no_lognormal_estimate():
    cfg = SweepConfig(fraction_grid=[(0.5, 0.5)], d_over_a_grid=[1.0], sigma_sq_grid=[1.0], n_per_cell=1)
    frame = run_sweep(cfg)
    assert len(frame) == 1
    row = frame.iloc[0]
    assert math.isnan(row["p_l"]) and math.isnan(row["rr"]) and math.isnan(row["rr_rounded"])
    assert row["p_s"] in (0.0, 1.0)


def test_write_csv_uses_lf_and_no_index(small_config, tmp_path):
    frame = run_sweep(small_config)
    path = tmp_path / "sweep.csv"
    write_csv(frame, path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.decode("utf-8") == frame_to_csv_text(frame)
    assert len(raw.decode("utf-8").splitlines()) == small_config.cell_count + 1


def test_cdf_comparison_tables(tmp_path):
    data = emit_cdf_comparison(XosType.EQUITY_ONLY, [0.5, 0.9], seed=4, n=20_000, quantile_points=51)
    assert list(data.cdf_xos.columns) == ["d", "q", "cdf_xos", "p_s", "se_s"]
    assert list(data.cdf_lognormal.columns) == ["d", "q", "cdf_lognormal", "p_l", "rr"]
    assert len(data.cdf_xos) == len(data.cdf_lognormal) == 2 * 51
    for _, block in data.cdf_xos.groupby("d"):
        assert np.all(np.diff(block["cdf_xos"]) >= 0)
        assert np.all(np.diff(block["q"]) >= 0)
    assert set(data.comparisons) == {0.5, 0.9}
    assert data.comparisons[0.5].p_suzuki < data.comparisons[0.9].p_suzuki

    xos_path, lognormal_path = data.write(str(tmp_path / "cdf"))
    assert pd.read_csv(xos_path).shape == data.cdf_xos.shape
    assert pd.read_csv(lognormal_path).shape == data.cdf_lognormal.shape


def test_scatter_rows_and_labels(standard_spec):
    x = XosStructure.debt_only(0.5, 0.5, 1.0, 1.0)
    frame = emit_scatter(x, standard_spec, 5_000, seed=8)
    assert list(frame.columns) == ["v1", "v2", "area"]
    assert len(frame) == 5_000
    assert set(frame["area"]) <= {"ss", "sd", "ds", "dd"}
    assert (frame.loc[frame["area"] == "ss", ["v1", "v2"]] >= 1.0 - 1e-12).all().all()


def test_scatter_without_cross_ownership_follows_each_firm(standard_spec):
    frame = emit_scatter(XosStructure(d1=0.8, d2=1.2), standard_spec, 5_000, seed=9)
    expected = [("s" if v1 >= 0.8 else "d") + ("s" if v2 >= 1.2 else "d") for v1, v2 in zip(frame["v1"], frame["v2"])]
    assert frame["area"].tolist() == expected


def test_scatter_follows_the_injected_stream_size(standard_spec):
    x = XosStructure.equity_only(0.5, 0.5, 1.0, 1.0)
    default = emit_scatter(x, standard_spec, 3_000, seed=10)
    single = emit_scatter(x, standard_spec, 3_000, seed=10, estimator=MonteCarloPdEstimator(stream_size=1_000))
    pooled = emit_scatter(x, standard_spec, 3_000, seed=10,
                          estimator=MonteCarloPdEstimator(stream_size=1_000, workers=3))
    pd.testing.assert_frame_equal(single, pooled)
    assert not np.array_equal(default["v1"].to_numpy(), single["v1"].to_numpy())


def test_sweep_cells_follow_the_configured_stream_size(small_config):
    split = small_config.model_copy(update={"stream_size": 500})
    assert frame_to_csv_text(run_sweep(split)) == frame_to_csv_text(run_sweep(split, workers=2))
    assert not run_sweep(split)["se_s"].equals(run_sweep(small_config)["se_s"])


@pytest.mark.slow
def test_smallest_relative_risk_on_the_study_slice():
    cfg = SweepConfig(d_over_a_grid=[0.7], sigma_sq_grid=[0.22314], n_per_cell=10_000, seed=11)
    frame = run_sweep(cfg, workers=2)
    assert len(frame) == 81
    assert frame["rr"].min() == pytest.approx(0.1779, abs=0.03)


@pytest.mark.slow
@pytest.mark.parametrize("xos_type, understates", [(XosType.EQUITY_ONLY, True), (XosType.DEBT_ONLY, False)])
def test_risk_direction_at_high_fractions_over_the_debt_grid(xos_type, understates):
    d_grid = [round(0.1 * k, 10) for k in range(1, 101)]
    data = emit_cdf_comparison(xos_type, d_grid, seed=12, quantile_points=3)
    assert len(data.comparisons) == 100
    for d, comparison in data.comparisons.items():
        if comparison.p_suzuki > 20 * comparison.se_suzuki:
            assert (comparison.rr < 1) if understates else (comparison.rr > 1), d
