"""Run configuration with flags > config file > environment > defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

ENV_CHECKPOINT_DIR = "OMEGAFORGE_CHECKPOINT_DIR"

_FORMATS = ("json", "csv")


def parse_threshold(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad threshold: {text!r}") from exc


@dataclass
class Config:
    max_len: int = 20
    max_steps: int = 10**6
    checkpoint_dir: Path = Path("checkpoints")
    output_format: str = "json"
    classify_threshold: Fraction = Fraction(1, 2)
    precision_bits: int = 32
    threads: int = 1

    def validate(self) -> "Config":
        if self.max_len < 0:
            raise ValueError("max_len must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.output_format not in _FORMATS:
            raise ValueError(f"output format must be one of {_FORMATS}")
        if self.classify_threshold <= 0:
            raise ValueError("classify threshold must be positive")
        if self.precision_bits < 1:
            raise ValueError("precision_bits must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        return self


_PARSERS = {
    "max_len": int,
    "max_steps": int,
    "checkpoint_dir": Path,
    "output_format": str,
    "classify_threshold": parse_threshold,
    "precision_bits": int,
    "threads": int,
}


def read_config_file(path) -> dict:
    """key=value per line; blank lines and # comments ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _PARSERS[key](value.strip())
    return values


def resolve_config(flag_values: dict, config_path=None, env=None) -> Config:
    """Merge the sources in precedence order and validate the result."""
    env = os.environ if env is None else env
    merged: dict = {}
    if ENV_CHECKPOINT_DIR in env:
        merged["checkpoint_dir"] = Path(env[ENV_CHECKPOINT_DIR])
    if config_path is not None:
        merged.update(read_config_file(config_path))
    for field in fields(Config):
        value = flag_values.get(field.name)
        if value is not None:
            merged[field.name] = value
    return Config(**merged).validate()
