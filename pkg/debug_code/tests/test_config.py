import pytest

from config import Config
from models.errors import ConfigError


@pytest.fixture
def clean_env(monkeypatch):
    for name in ("XOS_SEED", "XOS_STREAM_SIZE", "XOS_WORKERS", "XOS_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_defaults(clean_env):
    config = Config.from_env()
    assert config == Config()
    assert (config.default_seed, config.stream_size, config.workers) == (0, 250_000, 1)
    assert config.rounding == 4


def test_environment_overrides(clean_env):
    clean_env.setenv("XOS_SEED", "17")
    clean_env.setenv("XOS_STREAM_SIZE", "1000")
    clean_env.setenv("XOS_WORKERS", "4")
    clean_env.setenv("XOS_LOG_LEVEL", "debug")
    config = Config.from_env()
    assert (config.default_seed, config.stream_size, config.workers, config.log_level) == (17, 1000, 4, "DEBUG")


def test_blank_values_fall_back_to_defaults(clean_env):
    clean_env.setenv("XOS_SEED", "  ")
    assert Config.from_env().default_seed == 0


@pytest.mark.parametrize("name, raw", [
    ("XOS_SEED", "abc"),
    ("XOS_SEED", "-1"),
    ("XOS_WORKERS", "0"),
    ("XOS_STREAM_SIZE", "1.5"),
    ("XOS_LOG_LEVEL", "LOUD"),
])
def test_invalid_values_raise_config_error(clean_env, name, raw):
    clean_env.setenv(name, raw)
    with pytest.raises(ConfigError, match=name):
        Config.from_env()
