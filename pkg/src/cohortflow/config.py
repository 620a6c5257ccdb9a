"""Flat ``section.key = value`` run configuration."""
from __future__ import annotations

import math
from dataclasses import fields

from .alert import AlertConfig
from .cohort.model import CohortConfig
from .core import CalibrationConfig
from .detect import DetectorConfig, format_float
from .linker.tracker import LinkerConfig

SECTIONS = {
    "calibration": CalibrationConfig,
    "detector": DetectorConfig,
    "linker": LinkerConfig,
    "cohort": CohortConfig,
    "alert": AlertConfig,
}

RUN_DEFAULTS = {
    "run.seed": 0,
    "run.input": "",
    "run.locations": "",
    "simulator.preset": "",
}


class ConfigError(ValueError):
    pass


def _defaults():
    d = {}
    for section, cls in SECTIONS.items():
        for f in fields(cls):
            d[f"{section}.{f.name}"] = f.default
    d.update(RUN_DEFAULTS)
    return d


DEFAULTS = _defaults()

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _coerce(key, raw, default):
    text = raw.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ConfigError(f"{key}: must be finite")
        return v
    return text


def parse_config(text, source="<config>"):
    """Parse config text into {key: value}; unknown or repeated keys are errors."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = _coerce(key, value, DEFAULTS[key])
    return out


def load_config(path=None, overrides=None):
    """Defaults merged with the file at ``path`` and then ``overrides``."""
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg.update(parse_config(text, str(path)))
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        cfg[key] = value
    return cfg


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def dump_config(cfg) -> str:
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))


def section(cfg, name):
    """Build the dataclass for ``name`` from a merged config."""
    cls = SECTIONS[name]
    kw = {f.name: cfg[f"{name}.{f.name}"] for f in fields(cls)}
    try:
        return cls(**kw)
    except ValueError as exc:
        raise ConfigError(f"[{name}] {exc}") from None
