"""
This file loads the run configuration: platform constants, simulation settings
and controller tuning, from config.json plus command-line overrides.
"""
import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from classes.controller_settings import AllocationSettings, CompensationSettings, LqiWeights, PidGains
from classes.platform_params import PlatformParams
from classes.sim_config import SimConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).with_name("config.json")
SCENARIOS_PATH = Path(__file__).with_name("scenarios.json")

SECTIONS = ("params", "sim", "lqi", "pid", "allocation", "compensation")


class ConfigError(ValueError):
    """Raised for malformed configuration files or overrides."""


@dataclass(frozen=True)
class Config(object):
    params: PlatformParams = field(default_factory=PlatformParams)
    sim: SimConfig = field(default_factory=SimConfig)
    lqi: LqiWeights = field(default_factory=LqiWeights)
    pid: PidGains = field(default_factory=PidGains)
    allocation: AllocationSettings = field(default_factory=AllocationSettings)
    compensation: CompensationSettings = field(default_factory=CompensationSettings)


def _build(cls: type, data: dict[str, Any], section: str) -> Any:
    names = {f.name for f in fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"Unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid [{section}] section: {e}") from e


def config_from_dict(data: dict[str, Any]) -> Config:
    """
    Build a Config from a mapping of sections. Missing sections keep their
    defaults. When the sim section has no comm_delay, the platform's is used.
    """
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"Unknown config sections: {sorted(unknown)}")
    try:
        params = PlatformParams.from_dict(data.get("params", {}))
        lqi = LqiWeights.from_dict(data.get("lqi", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
    sim_data = dict(data.get("sim", {}))
    sim_data.setdefault("comm_delay", params.comm_delay)
    return Config(
        params=params,
        sim=_build(SimConfig, sim_data, "sim"),
        lqi=lqi,
        pid=_build(PidGains, data.get("pid", {}), "pid"),
        allocation=_build(AllocationSettings, data.get("allocation", {}), "allocation"),
        compensation=_build(CompensationSettings, data.get("compensation", {}), "compensation"),
    )


def load_config(path: str | Path | None = None) -> Config:
    """
    Read a JSON configuration file.

    Args:
        path (str | Path | None): File to read. Defaults to the bundled config.json.

    Returns:
        Config: The validated configuration.
    """
    path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    logger.debug("Loaded configuration from %s", path)
    return config_from_dict(data)


def _section_dict(config: Config, section: str) -> dict[str, Any]:
    obj = getattr(config, section)
    return {f.name: getattr(obj, f.name) for f in fields(obj) if f.init}


def parse_override(text: str) -> tuple[str, str, Any]:
    """
    Split ``section.key=value`` (or ``key=value``, meaning a platform
    parameter). The value is parsed as JSON and falls back to a string.
    """
    if "=" not in text:
        raise ConfigError(f"Override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    section, _, name = key.strip().rpartition(".")
    section = section or "params"
    if section not in SECTIONS:
        raise ConfigError(f"Unknown config section in override {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return section, name, value


def apply_overrides(config: Config, overrides: list[str] | dict[str, Any]) -> Config:
    """
    Return a copy of the configuration with overrides applied. A mapping is
    treated as bare platform-parameter overrides (the form scenarios use).
    """
    if isinstance(overrides, dict):
        items = [("params", key, value) for key, value in overrides.items()]
    else:
        items = [parse_override(text) for text in overrides]
    if not items:
        return config

    sections = {section: _section_dict(config, section) for section in SECTIONS}
    for section, name, value in items:
        if name not in sections[section]:
            raise ConfigError(f"Unknown key {section}.{name}")
        sections[section][name] = value
        logger.debug("Override %s.%s = %r", section, name, value)
    overridden = {(section, name) for section, name, _ in items}
    if ("params", "comm_delay") in overridden and ("sim", "comm_delay") not in overridden:
        sections["sim"]["comm_delay"] = sections["params"]["comm_delay"]
    return config_from_dict(sections)


def with_seed(config: Config, seed: int) -> Config:
    return replace(config, sim=replace(config.sim, seed=seed))
