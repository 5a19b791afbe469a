"""Tolerance and sampling settings, with a strict YAML loader."""

from __future__ import annotations

from dataclasses import dataclass, fields

import yaml


@dataclass
class IterationSettings:
    tol: float = 1e-6
    max_iter: int = 10_000
    ledger_slack: float = 1e-9  # relative, scaled by max(1, rhs)


@dataclass
class CertifySettings:
    comparison_slack: float = 1e-9  # relative, scaled by max(1, rhs)
    random_pairs: int = 10_000
    seed: int = 0
    include_image_pairs: bool = True
    cross_grid: bool = True
    literal_derived: bool = False
    workers: int = 1


@dataclass
class Settings:
    iteration: IterationSettings
    certify: CertifySettings


_SECTIONS = {"iteration": IterationSettings, "certify": CertifySettings}


def default_settings() -> Settings:
    return Settings(iteration=IterationSettings(), certify=CertifySettings())


def load_settings(path: str) -> Settings:
    """Load settings from a YAML file.

    Unknown sections or keys raise ``ValueError`` so a typo such as
    ``max_iters`` is caught instead of silently ignored.
    """
    with open(path) as f:
        raw = yaml.safe_load(f) or {}

    if not isinstance(raw, dict):
        raise ValueError(f"Settings YAML must be a mapping, got {type(raw).__name__}")
    validate_keys("settings", raw, frozenset(_SECTIONS))

    built = {}
    for section, cls in _SECTIONS.items():
        section_raw = raw.get(section, {}) or {}
        allowed = frozenset(f.name for f in fields(cls))
        validate_keys(section, section_raw, allowed)
        built[section] = cls(**_cast_values(section, cls, section_raw))
    return Settings(**built)


def _cast_values(section: str, cls: type, raw: dict) -> dict:
    """Cast each value to the type of the matching dataclass default."""
    defaults = {f.name: f.default for f in fields(cls)}
    out = {}
    for key, value in raw.items():
        kind = type(defaults[key])
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError(f"'{section}.{key}' must be true or false, got {value!r}")
            out[key] = value
            continue
        try:
            out[key] = kind(value)
        except (TypeError, ValueError):
            raise ValueError(
                f"'{section}.{key}' must be {kind.__name__}, got {value!r}"
            )
    return out


def validate_keys(
    section: str,
    raw: dict,
    allowed: frozenset[str],
    required: frozenset[str] = frozenset(),
    error: type[Exception] = ValueError,
) -> None:
    if not isinstance(raw, dict):
        raise error(f"'{section}' must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - allowed
    if unknown:
        raise error(
            f"Unknown keys in '{section}': {sorted(unknown)}. "
            f"Allowed: {sorted(allowed)}"
        )
    missing = required - set(raw)
    if missing:
        raise error(f"Missing keys in '{section}': {sorted(missing)}")
