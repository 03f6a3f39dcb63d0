"""Plain-text ``key = value`` configuration files for models and training runs."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InputError, VersionError
from .model import ModelConfig

CONFIG_VERSION = 1


@dataclass
class TrainConfig:
    steps: int = 200
    batch_size: int = 2
    crop: int = 64
    learning_rate: float = 8e-4
    min_learning_rate: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    eval_every: int = 20
    seed: int = 0


def _parse_value(raw: str, current):
    if isinstance(current, list):
        return [int(v) for v in raw.replace("[", "").replace("]", "").replace(",", " ").split()]
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    return type(current)(raw)


def parse_config(text: str) -> tuple[ModelConfig, TrainConfig]:
    """Parse ``key = value`` lines (``#`` starts a comment) into the two config objects.

    Keys are the field names of :class:`ModelConfig` and :class:`TrainConfig`;
    ``lambda`` is accepted for ``lam``. An optional ``format_version`` key
    must equal the supported version.
    """
    model, train = ModelConfig(), TrainConfig()
    targets = {f.name: model for f in fields(ModelConfig)}
    targets.update({f.name: train for f in fields(TrainConfig)})
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key == "lambda":
            key = "lam"
        if key == "format_version":
            if int(raw) != CONFIG_VERSION:
                raise VersionError(f"config version {raw}, expected {CONFIG_VERSION}")
            continue
        if key == "latent_ffabs":
            if int(raw) != 6:
                raise InputError("latent_ffabs is fixed at 6")
            continue
        if key not in targets:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        obj = targets[key]
        try:
            setattr(obj, key, _parse_value(raw, getattr(obj, key)))
        except ValueError as exc:
            raise InputError(f"config line {lineno}: bad value for {key}: {raw!r}") from exc
    model.__post_init__()
    return model, train


def load_config(path) -> tuple[ModelConfig, TrainConfig]:
    return parse_config(Path(path).read_text())


def format_config(model: ModelConfig, train: TrainConfig | None = None) -> str:
    lines = [f"format_version = {CONFIG_VERSION}"]
    for f in fields(ModelConfig):
        value = getattr(model, f.name)
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    lines.append("latent_ffabs = 6")
    if train is not None:
        lines += [f"{f.name} = {getattr(train, f.name)}" for f in fields(TrainConfig)]
    return "\n".join(lines) + "\n"


def save_config(path, model: ModelConfig, train: TrainConfig | None = None) -> None:
    Path(path).write_text(format_config(model, train))
