import os
from dataclasses import dataclass, fields

from dotenv import load_dotenv

from models.errors import ConfigError


@dataclass
class Config:
    """Application configuration."""

    # Sampling
    default_seed: int = 0
    stream_size: int = 250_000  # scenarios per substream
    workers: int = 1

    # Fixed-point valuation
    fixed_point_tol: float = 1e-12
    fixed_point_max_iter: int = 1_000_000

    # Output
    rounding: int = 4
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Config":
        """Defaults overridden by XOS_* environment variables (and a .env file)."""
        load_dotenv()
        defaults = {f.name: f.default for f in fields(cls)}
        return cls(
            default_seed=_env_int("XOS_SEED", defaults["default_seed"], minimum=0),
            stream_size=_env_int("XOS_STREAM_SIZE", defaults["stream_size"], minimum=1),
            workers=_env_int("XOS_WORKERS", defaults["workers"], minimum=1),
            log_level=_env_log_level("XOS_LOG_LEVEL", defaults["log_level"]),
        )


def _env_int(name: str, default: int, minimum: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name}={raw!r} is not an integer") from e
    if value < minimum:
        raise ConfigError(f"{name}={value} must be at least {minimum}")
    return value


def _env_log_level(name: str, default: str) -> str:
    level = os.environ.get(name, default).strip().upper() or default
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"{name}={level!r} is not a logging level")
    return level
