"""Flat ``key = value`` run configuration shared by the CLI commands."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .augment import AugmentConfig
from .errors import InvalidParam
from .train import TrainConfig


@dataclass
class RunConfig:
    input: str | None = None
    header: bool = False
    out: str = "runs/default"
    seed: int = 0
    # augmentation
    op: str = "none"
    alpha: float = 0.5
    scope: float = 0.5
    rho: float = 0.5
    apply_to: str = "both"
    constrained: bool = True
    # training
    max_len: int = 50
    batch_size: int = 128
    lr: float = 0.001
    dim: int = 50
    l2: float = 1e-5
    max_epochs: int = 200
    eval_every: int = 10
    patience_evals: int = 2
    # evaluation
    candidates: str = "sampled"
    ks: str = "10"
    split: str = "test"

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(op=self.op, alpha=self.alpha, scope=self.scope, rho=self.rho,
                             apply_to=self.apply_to, constrained=self.constrained,
                             max_len=self.max_len)

    def train_config(self) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, lr=self.lr, dim=self.dim,
                           max_len=self.max_len, l2=self.l2, max_epochs=self.max_epochs,
                           eval_every=self.eval_every, patience_evals=self.patience_evals,
                           seed=self.seed)

    def k_list(self) -> tuple[int, ...]:
        try:
            ks = tuple(int(k) for k in str(self.ks).split(",") if k.strip())
        except ValueError:
            raise InvalidParam(f"ks must be comma-separated integers, got {self.ks!r}") from None
        if not ks or min(ks) < 1:
            raise InvalidParam(f"ks must list positive integers, got {self.ks!r}")
        return ks

    def validate(self) -> None:
        if self.candidates not in ("sampled", "full"):
            raise InvalidParam(f"candidates must be 'sampled' or 'full', got {self.candidates!r}")
        if self.split not in ("valid", "test"):
            raise InvalidParam(f"split must be 'valid' or 'test', got {self.split!r}")
        self.augment_config()
        self.train_config()
        self.k_list()

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **coerce_values(changes))

    def dumps(self) -> str:
        return "".join(f"{f.name} = {format_value(getattr(self, f.name))}\n" for f in fields(self))


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return "" if value is None else str(value)


def parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise InvalidParam(f"not a boolean: {text!r}")


def coerce(key: str, value):
    if key not in _TYPES:
        raise InvalidParam(f"unknown config key {key!r}")
    kind = _TYPES[key]
    if not isinstance(value, str):
        return value
    try:
        if kind == "bool":
            return parse_bool(value)
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise InvalidParam(f"{key}: cannot parse {value!r} as {kind}") from None
    return value


def coerce_values(values: dict) -> dict:
    return {k: coerce(k, v) for k, v in values.items()}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParam(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value.strip("\"'")
    return coerce_values(values)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a config file (if given) and apply non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**coerce_values(values))
