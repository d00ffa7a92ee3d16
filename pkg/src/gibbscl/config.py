"""Flat TOML configuration files mapped onto :class:`ScenarioConfig`."""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

from .harness import ScenarioConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALIASES = {"lambda-mix": "lambda_mix", "dummy-intensity": "dummy_intensity"}
EXTRA_KEYS = {"dummy_intensity"}


class ConfigError(ValueError):
    """Raised for unknown keys or invalid values."""


def _normalize(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        name = ALIASES.get(key, key.replace("-", "_"))
        if isinstance(value, list):
            value = tuple(value)
        out[name] = value
    return out


def parse_config(raw: dict) -> tuple[ScenarioConfig, dict]:
    """Split a flat key/value mapping into a config and CLI-only extras."""
    data = _normalize(raw)
    fields = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - fields - EXTRA_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    extras = {k: data.pop(k) for k in list(data) if k in EXTRA_KEYS}
    try:
        return ScenarioConfig(**data), extras
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> tuple[ScenarioConfig, dict]:
    with open(Path(path), "rb") as fh:
        return parse_config(tomllib.load(fh))
