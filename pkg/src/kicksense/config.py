"""Experiment configuration: INI round-trip plus environment overrides.

One config object gathers the simulator, windowing, and training knobs
the CLI exposes. ``KICKSENSE_OUTPUT_ROOT`` overrides the output root so
batch jobs can redirect artifacts without editing configs.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields, replace

from .flowsim import ConfigurationError, SimConfig
from .training import TrainSettings

OUTPUT_ROOT_ENV = "KICKSENSE_OUTPUT_ROOT"


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    window: int = 100
    stride: int = 5
    repetitions: int = 10
    split_seed: int = 101
    train: TrainSettings = field(default_factory=TrainSettings)
    output_root: str = "runs"

    def resolved_output_root(self) -> str:
        return os.environ.get(OUTPUT_ROOT_ENV, self.output_root)


_SECTIONS = {
    "simulation": (SimConfig, "sim"),
    "training": (TrainSettings, "train"),
}
_TOP_LEVEL = ("window", "stride", "repetitions", "split_seed", "output_root")


def _coerce(raw: str, kind):
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return kind(raw)


def load_config(path) -> ExperimentConfig:
    """Parse an INI config; unknown keys or bad values raise
    :class:`ConfigurationError` naming the offender."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    cfg = ExperimentConfig()
    updates = {}
    for section, (cls, attr) in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        allowed = {f.name: f.type for f in fields(cls)}
        type_map = {f.name: type(getattr(getattr(cfg, attr), f.name)) for f in fields(cls)}
        kwargs = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigurationError(f"[{section}] has no option {key!r}")
            try:
                kwargs[key] = _coerce(raw, type_map[key])
            except ValueError as exc:
                raise ConfigurationError(f"[{section}] {key}: {exc}") from None
        try:
            updates[attr] = replace(getattr(cfg, attr), **kwargs)
        except (ValueError, ConfigurationError) as exc:
            raise ConfigurationError(f"[{section}]: {exc}") from None
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            if key not in _TOP_LEVEL:
                raise ConfigurationError(f"[experiment] has no option {key!r}")
            try:
                updates[key] = _coerce(raw, type(getattr(cfg, key)))
            except ValueError as exc:
                raise ConfigurationError(f"[experiment] {key}: {exc}") from None
    extra = set(parser.sections()) - set(_SECTIONS) - {"experiment"}
    if extra:
        raise ConfigurationError(f"unknown config section(s): {sorted(extra)}")
    try:
        return replace(cfg, **updates)
    except (ValueError, ConfigurationError) as exc:
        raise ConfigurationError(str(exc)) from None


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config as INI text that :func:`load_config` re-reads."""
    parser = configparser.ConfigParser()
    parser["experiment"] = {k: str(getattr(cfg, k)) for k in _TOP_LEVEL}
    for section, (cls, attr) in _SECTIONS.items():
        obj = getattr(cfg, attr)
        parser[section] = {f.name: str(getattr(obj, f.name)) for f in fields(cls)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
