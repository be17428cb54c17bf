"""Versioned INI config for the planner and the error-injection rates."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Union

from .noise import NoiseConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration."""


@dataclass(frozen=True)
class PlannerConfig:
    jitter_center_sigma: float = 5.0
    jitter_size_frac: float = 0.1
    n_pos_target: int = 128
    n_neg_target: int = 128
    iou_threshold: float = 0.5
    tiou_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.jitter_center_sigma < 0 or self.jitter_size_frac < 0:
            raise ConfigError("jitter sigmas must be non-negative")
        if self.n_pos_target < 0 or self.n_neg_target < 0:
            raise ConfigError("sampling counts must be non-negative")
        for name in ("iou_threshold", "tiou_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")


def _coerce(section: configparser.SectionProxy, cls: type) -> dict:
    known = {f.name: f.type for f in fields(cls)}
    out = {}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section [{section.name}]")
        raw = section[key]
        try:
            out[key] = int(raw) if known[key] == "int" else float(raw)
        except ValueError:
            raise ConfigError(f"{section.name}.{key}: cannot parse {raw!r}") from None
    return out


def load_config(path: Union[str, Path]) -> tuple[PlannerConfig, NoiseConfig]:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "graspwise" not in parser or "version" not in parser["graspwise"]:
        raise ConfigError("missing [graspwise] version header")
    version = parser["graspwise"]["version"]
    if version != str(CONFIG_VERSION):
        raise ConfigError(f"unsupported config version {version!r}, expected {CONFIG_VERSION}")
    for name in parser.sections():
        if name not in ("graspwise", "planner", "noise"):
            raise ConfigError(f"unknown section [{name}]")
    try:
        planner = PlannerConfig(**_coerce(parser["planner"], PlannerConfig)) if "planner" in parser else PlannerConfig()
        noise = NoiseConfig(**_coerce(parser["noise"], NoiseConfig)) if "noise" in parser else NoiseConfig()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return planner, noise


def save_config(planner: PlannerConfig, noise: NoiseConfig, path: Union[str, Path]) -> None:
    parser = configparser.ConfigParser()
    parser["graspwise"] = {"version": str(CONFIG_VERSION)}
    parser["planner"] = {f.name: repr(getattr(planner, f.name)) for f in fields(PlannerConfig)}
    parser["noise"] = {f.name: repr(getattr(noise, f.name)) for f in fields(NoiseConfig)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
