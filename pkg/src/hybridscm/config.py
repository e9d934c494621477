"""TOML experiment configuration and the bundled presets."""

from __future__ import annotations

import sys
from dataclasses import fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .harness import Scenario

EXPERIMENTS = ("nse_vs_q", "nse_vs_k", "music_mse", "complexity")
_SCENARIO_KEYS = {f.name for f in fields(Scenario)}


class ConfigError(ValueError):
    pass


def preset_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("hybridscm.presets").iterdir() if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    res = resources.files("hybridscm.presets").joinpath(f"{name}.toml")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return res.read_text()


def parse_config(text: str, origin: str = "<string>") -> dict:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    if "scenario" not in doc:
        raise ConfigError(f"{origin}: missing [scenario] table")
    try:
        Scenario.from_dict(doc["scenario"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: bad [scenario]: {exc}") from exc
    return doc


def load_config(path=None, preset=None) -> dict:
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return parse_config(p.read_text(), str(p))
    return parse_config(preset_text(preset or "desk"), f"preset:{preset or 'desk'}")


def experiment_scenario(doc: dict, name: str, **overrides) -> tuple:
    """Return ``(Scenario, params)`` for one experiment table.

    Keys of the experiment table that name scenario fields override the base
    ``[scenario]`` values; the remaining keys are experiment parameters.
    """
    table = dict(doc.get(name, {}))
    scen_over = {k: table.pop(k) for k in list(table) if k in _SCENARIO_KEYS}
    scen_over.update({k: v for k, v in overrides.items() if v is not None})
    try:
        base = replace(Scenario.from_dict(doc["scenario"]), **scen_over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario for {name}: {exc}") from exc
    return base, table
