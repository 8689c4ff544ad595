"""Simulation config files.

Plain ``key = value`` lines; blank lines and lines starting with ``#`` are
ignored. Keys::

    table          one of the table ids (required)
    master_seed    non-negative integer (required)
    ensemble_size  runs per family and n (default 1000)
    families       comma list of Logistic, Weibull, Staircase (default: all)
    n_values       comma list of total sample sizes (default 20, 40, 80)
    level          nominal interval coverage (default 0.9)
    workers        worker processes (default 1)
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..errors import ConfigError
from .scenarios import FAMILIES, family_tag
from .tables import N_VALUES, TABLE_IDS

_KEYS = {"table", "master_seed", "ensemble_size", "families", "n_values", "level", "workers"}


@dataclass(frozen=True)
class SimulationConfig:
    table: str
    master_seed: int
    ensemble_size: int = 1000
    families: tuple = FAMILIES
    n_values: tuple = N_VALUES
    level: float = 0.9
    workers: int = 1


def _int(key, text, lineno, minimum):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be an integer, got {text!r}") from None
    if value < minimum:
        raise ConfigError(f"line {lineno}: {key} must be >= {minimum}")
    return value


def parse_config(text: str, seed_override: Optional[int] = None) -> SimulationConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)

    if "table" not in raw:
        raise ConfigError("missing required key 'table'")
    table, lineno = raw["table"]
    if table not in TABLE_IDS:
        raise ConfigError(f"line {lineno}: unknown table id {table!r}")
    if seed_override is not None:
        seed = int(seed_override)
        if seed < 0:
            raise ConfigError("seed must be >= 0")
    elif "master_seed" in raw:
        seed = _int("master_seed", *raw["master_seed"], 0)
    else:
        raise ConfigError("missing required key 'master_seed'")

    out = {"table": table, "master_seed": seed}
    if "ensemble_size" in raw:
        out["ensemble_size"] = _int("ensemble_size", *raw["ensemble_size"], 1)
    if "workers" in raw:
        out["workers"] = _int("workers", *raw["workers"], 1)
    if "families" in raw:
        value, lineno = raw["families"]
        names = [v for v in (s.strip() for s in value.split(",")) if v]
        if not names:
            raise ConfigError(f"line {lineno}: families is empty")
        try:
            out["families"] = tuple(family_tag(v) for v in names)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if "n_values" in raw:
        value, lineno = raw["n_values"]
        parts = [v for v in (s.strip() for s in value.split(",")) if v]
        if not parts:
            raise ConfigError(f"line {lineno}: n_values is empty")
        out["n_values"] = tuple(_int("n_values", v, lineno, 5) for v in parts)
    if "level" in raw:
        value, lineno = raw["level"]
        try:
            level = float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: level must be a number") from None
        if not 0.0 < level < 1.0:
            raise ConfigError(f"line {lineno}: level must lie in (0, 1)")
        out["level"] = level
    return SimulationConfig(**out)


def load_config(path, seed_override: Optional[int] = None) -> SimulationConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, seed_override)
