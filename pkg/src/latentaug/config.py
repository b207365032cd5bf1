"""Run configuration: defaults, file parsing, overrides, serialization.

The config file format is flat UTF-8 `key = value` lines with `#` comments.
Field defaults are the full-scale reference hyperparameter values; anything a file or
command line does not mention keeps its default. serialize -> parse ->
serialize is a fixed point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    seed: int = 1234
    data: str = ""
    out: str = "runs"
    max_pairs: int = 20000

    # encoder-decoder stage
    epochs: int = 400
    batch_size: int = 30
    lstm_units: int = 256
    embedding_dim: int = 256
    dropout_encoder: float = 0.5
    dropout_decoder: float = 0.5
    dropout_logits: float = 0.5
    l2_encoder: float = 5e-5
    l2_decoder: float = 1e-5
    learning_rate: float = 2e-3
    beta1: float = 0.7
    beta2: float = 0.97

    # adversarial stage; learning_rate_gan is the stacked-model default and is
    # superseded by the generator/discriminator-specific rates below
    gan_epochs: int = 8000
    gan_batch_size: int = 1900
    noise_width: int = 512
    discriminator_units: int = 1024
    learning_rate_gan: float = 1e-4
    learning_rate_generator: float = 4e-4
    learning_rate_discriminator: float = 1e-4
    generator_tanh_output: bool = False

    # corpus-quality thresholds; None means self-calibrate (5th percentile)
    tau_unrelated: float | None = None
    tau_nonsensical: float | None = None

    @property
    def latent_width(self) -> int:
        return 2 * self.lstm_units

    def validate(self) -> "RunConfig":
        counts = ["max_pairs", "epochs", "batch_size", "lstm_units", "embedding_dim",
                  "gan_epochs", "gan_batch_size", "noise_width", "discriminator_units"]
        for name in counts:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ["dropout_encoder", "dropout_decoder", "dropout_logits"]:
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {rate}")
        rates = ["learning_rate", "learning_rate_gan", "learning_rate_generator",
                 "learning_rate_discriminator"]
        for name in rates:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ["l2_encoder", "l2_decoder"]:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ["beta1", "beta2"]:
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {b}")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_OPTIONAL_FLOATS = {"tau_unrelated", "tau_nonsensical"}


def _parse_value(name: str, text: str):
    field = _FIELDS.get(name)
    if field is None:
        raise ConfigError(f"unknown config key {name!r}")
    text = text.strip()
    try:
        if name in _OPTIONAL_FLOATS:
            return None if text.lower() == "none" else float(text)
        if field.type == "int":
            return int(text)
        if field.type == "float":
            return float(text)
        if field.type == "bool":
            if text.lower() in ("true", "false"):
                return text.lower() == "true"
            raise ValueError(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = dataclasses.replace(base) if base else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        setattr(cfg, key, _parse_value(key, value))
    return cfg


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Set raw string values (CLI flags) on top of a parsed config."""
    cfg = dataclasses.replace(cfg)
    for key, value in overrides.items():
        setattr(cfg, key, _parse_value(key, str(value)))
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in _OPTIONAL_FLOATS and value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
