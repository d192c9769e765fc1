import pytest

from models.errors import ConfigError
from models.sweep import STUDY_SIGMA_SQ
from models.xos import XosType
from services.sweep_config_loader import load_sweep_config, parse_range, parse_sweep_config

CONFIG = """
# small debt-only sweep
xos_type = DEBT
fractions = 0.1:0.3:0.1
d_over_a = 0.5, 1.0:1.2:0.1
sigma_sq = 0.22314
n_per_cell = 500   # per cell
seed = 7
"""


def test_parse_full_config():
    cfg = parse_sweep_config(CONFIG)
    assert cfg.xos_type == XosType.DEBT_ONLY
    assert cfg.fraction_grid == [(a, b) for a in (0.1, 0.2, 0.3) for b in (0.1, 0.2, 0.3)]
    assert cfg.d_over_a_grid == [0.5, 1.0, 1.1, 1.2]
    assert cfg.sigma_sq_grid == [0.22314]
    assert (cfg.n_per_cell, cfg.seed) == (500, 7)
    assert cfg.cell_count == 9 * 4


def test_empty_config_is_the_study_grid():
    cfg = parse_sweep_config("")
    assert cfg.xos_type == XosType.EQUITY_ONLY
    assert len(cfg.fraction_grid) == 81
    assert cfg.d_over_a_grid[0] == 0.1 and cfg.d_over_a_grid[-1] == 3.0
    assert tuple(cfg.sigma_sq_grid) == STUDY_SIGMA_SQ
    assert cfg.cell_count == 81 * 30 * 12


def test_fraction_pairs_are_taken_as_listed():
    cfg = parse_sweep_config("fraction_pairs = 0.9/0.1, 0.5/0.5")
    assert cfg.fraction_grid == [(0.9, 0.1), (0.5, 0.5)]


@pytest.mark.parametrize("text, expected", [
    ("0:1:0.25", [0.0, 0.25, 0.5, 0.75, 1.0]),
    ("0.1:0.3:0.1", [0.1, 0.2, 0.3]),
    ("2:2:1", [2.0]),
])
def test_parse_range(text, expected):
    assert parse_range(text) == expected


@pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "0:1", "a:b:c"])
def test_parse_range_rejects_bad_ranges(text):
    with pytest.raises(ValueError):
        parse_range(text)


@pytest.mark.parametrize("text, line, fragment", [
    ("seed = 1\nflavour = mild", 2, "unknown key"),
    ("seed = 1\n\nseed = 2", 3, "repeats line 1"),
    ("fractions = 0.5\nfraction_pairs = 0.5/0.5", 2, "repeats line 1"),
    ("# header\nn_per_cell = lots", 2, "invalid value"),
    ("d_over_a = 0.5, , 1", 1, "invalid value"),
    ("just some words", 1, "expected key=value"),
    ("seed = 1\nn_per_cell = 0", 2, "invalid n_per_cell"),
    ("fractions = 0.5, 1.0", 1, "invalid fraction_grid"),
    ("sigma_sq = -1", 1, "invalid sigma_sq_grid"),
])
def test_errors_name_the_line(text, line, fragment):
    with pytest.raises(ConfigError) as excinfo:
        parse_sweep_config(text)
    message = str(excinfo.value)
    assert message.startswith(f"line {line}: ")
    assert fragment in message


def test_model_level_errors_have_no_line():
    with pytest.raises(ConfigError) as excinfo:
        parse_sweep_config("xos_type = mixed")
    assert not str(excinfo.value).startswith("line")


def test_overrides_beat_file_and_file_beats_defaults():
    cfg = parse_sweep_config("seed = 7", overrides={"workers": 3}, defaults={"seed": 1, "workers": 2, "rounding": 6})
    assert (cfg.seed, cfg.workers, cfg.rounding) == (7, 3, 6)
    cfg = parse_sweep_config("seed = 7", overrides={"seed": 9}, defaults={"seed": 1})
    assert cfg.seed == 9


def test_load_reads_file(tmp_path):
    path = tmp_path / "sweep.cfg"
    path.write_text(CONFIG, encoding="utf-8")
    assert load_sweep_config(str(path)) == parse_sweep_config(CONFIG)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="config file not found"):
        load_sweep_config(str(tmp_path / "missing.cfg"))


def test_stream_size_key_and_default():
    assert parse_sweep_config("stream_size = 5000").stream_size == 5000
    assert parse_sweep_config("seed = 1", defaults={"stream_size": 800}).stream_size == 800
    with pytest.raises(ConfigError, match="line 1"):
        parse_sweep_config("stream_size = 0")
