"""Bundled scenario registry.

Scenarios ship as YAML files inside the package; each one names the
theorem-style bound family it exercises so ``harnacklab list`` can show a
coverage table.  ``resolve_config`` lets the CLI accept either a bundled
scenario name or a filesystem path.
"""

from __future__ import annotations

import os
from importlib import resources

from .config import ConfigError, ScenarioConfig, load_scenario


def _scenario_dir():
    return resources.files("harnacklab") / "data"


def scenario_names() -> list[str]:
    names = []
    for entry in _scenario_dir().iterdir():
        if entry.name.endswith(".yaml"):
            names.append(entry.name[:-len(".yaml")])
    return sorted(names)


def load_bundled(name: str) -> ScenarioConfig:
    path = _scenario_dir() / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}; "
                          f"see `harnacklab list`")
    cfg = load_scenario(path)
    if cfg.name != name:
        raise ConfigError(f"bundled scenario file {name}.yaml declares "
                          f"name {cfg.name!r}")
    return cfg


def resolve_config(spec: str) -> ScenarioConfig:
    """A bundled scenario name, or a path to a YAML file."""
    if os.path.sep in spec or spec.endswith((".yaml", ".yml")) or \
            os.path.exists(spec):
        return load_scenario(spec)
    return load_bundled(spec)


def registry_table() -> list[tuple[str, str, str]]:
    """(name, theorems, title) rows for every bundled scenario."""
    rows = []
    for name in scenario_names():
        cfg = load_bundled(name)
        rows.append((name, ", ".join(cfg.theorems), cfg.title))
    return rows
