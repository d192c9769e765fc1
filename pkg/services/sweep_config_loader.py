import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

from pydantic import ValidationError

from models.errors import ConfigError
from models.sweep import SweepConfig

# Config key -> SweepConfig field
FIELD_FOR_KEY = {
    "xos_type": "xos_type",
    "fractions": "fraction_grid",
    "fraction_pairs": "fraction_grid",
    "d_over_a": "d_over_a_grid",
    "sigma_sq": "sigma_sq_grid",
    "n_per_cell": "n_per_cell",
    "seed": "seed",
    "rounding": "rounding",
    "a": "a",
    "sig12": "sig12",
    "workers": "workers",
    "stream_size": "stream_size",
}


def parse_number(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"'{text}' is not a finite number")
    return value


def parse_range(text: str) -> List[float]:
    """lo:hi:step, inclusive of hi up to half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"range '{text}' must look like lo:hi:step")
    lo, hi, step = (parse_number(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"range '{text}' needs lo <= hi and step > 0")
    count = math.floor((hi - lo) / step + 0.5)
    return [round(lo + k * step, 12) for k in range(count + 1)]


def parse_number_list(text: str) -> List[float]:
    values: List[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ValueError(f"empty list entry in '{text}'")
        values.extend(parse_range(item) if ":" in item else [parse_number(item)])
    return values


def parse_pairs(text: str) -> List[Tuple[float, float]]:
    pairs = []
    for item in text.split(","):
        left, sep, right = item.strip().partition("/")
        if not sep:
            raise ValueError(f"pair '{item.strip()}' must look like x/y")
        pairs.append((parse_number(left), parse_number(right)))
    return pairs


def parse_fraction_grid(text: str) -> List[Tuple[float, float]]:
    """Both fractions run over the same list; all combinations."""
    steps = parse_number_list(text)
    return [(f12, f21) for f12 in steps for f21 in steps]


def parse_int(text: str) -> int:
    return int(text)


PARSERS: Dict[str, Callable[[str], Any]] = {
    "xos_type": str.lower,
    "fractions": parse_fraction_grid,
    "fraction_pairs": parse_pairs,
    "d_over_a": parse_number_list,
    "sigma_sq": parse_number_list,
    "n_per_cell": parse_int,
    "seed": parse_int,
    "rounding": parse_int,
    "a": parse_number,
    "sig12": parse_number,
    "workers": parse_int,
    "stream_size": parse_int,
}


def parse_sweep_config(
    text: str,
    overrides: Dict[str, Any] = None,
    defaults: Dict[str, Any] = None,
) -> SweepConfig:
    """
    Parse a flat key=value sweep configuration.

    Args:
        text: Configuration text; '#' starts a comment
        overrides: SweepConfig fields that replace parsed values (e.g. a command-line seed)
        defaults: SweepConfig fields used where the text is silent (e.g. an environment seed)

    Returns:
        Validated SweepConfig

    Raises:
        ConfigError: with a 'line N:' prefix when a line is at fault
    """
    values: Dict[str, Any] = {}
    line_of_field: Dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got '{line}'")
        if key not in PARSERS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        field = FIELD_FOR_KEY[key]
        if field in line_of_field:
            raise ConfigError(f"line {lineno}: '{key}' repeats line {line_of_field[field]}")
        try:
            values[field] = PARSERS[key](value)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: invalid value for '{key}': {e}") from e
        line_of_field[field] = lineno

    values = {**(defaults or {}), **values, **(overrides or {})}
    try:
        return SweepConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else ""
        where = f"line {line_of_field[field]}: " if field in line_of_field else ""
        raise ConfigError(f"{where}invalid {field or 'config'}: {error['msg']}") from e


def load_sweep_config(path: str, overrides: Dict[str, Any] = None, defaults: Dict[str, Any] = None) -> SweepConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    logging.info(f"Loading sweep config from {config_path}")
    return parse_sweep_config(config_path.read_text(encoding="utf-8"), overrides, defaults)
