"""Experiment configuration (YAML) for the ``train`` and ``signchange`` commands.

Every field has a default except ``algorithm``, ``dataset`` and ``epochs``.
Example::

    algorithm: proxquant
    epochs: 40
    dataset: {kind: blobs, seed: 0, n: 800, classes: 4, dim: 10}
    model: {hidden: [32], activation: tanh}
    reg: {kind: binary-l1}
    schedule: {eta: 0.01, lam: 1.0e-4, homotopy: true, freeze_epoch: 30}
    optimizer: {name: adam}
    seeds: [0, 1, 2, 3]
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError
from .optim.steps import ALGORITHMS
from .regularize import RegSpec

__all__ = [
    "DatasetConfig",
    "ModelConfig",
    "OptimizerConfig",
    "ScheduleConfig",
    "TrainConfig",
    "WarmstartConfig",
    "load_config",
]

OBJECTIVES = ("quadratic", "shifted_quadratic", "toy+1", "toy-1")


@dataclass
class DatasetConfig:
    kind: str = "blobs"
    seed: int = 0
    n: int = 800
    classes: int = 4
    dim: int = 10
    spread: float = 1.0
    separation: float = 1.0
    path: Optional[str] = None
    label_column: str = "label"
    standardize: bool = True
    # objective kind
    name: Optional[str] = None
    center: Optional[list] = None
    init: Optional[list] = None

    def validate(self, base: Path):
        if self.kind == "blobs":
            if self.classes < 2 or self.n < self.classes:
                raise ConfigError("dataset: need n >= classes >= 2")
        elif self.kind == "csv":
            if not self.path:
                raise ConfigError("dataset: csv kind needs a path")
            p = Path(self.path)
            if not p.is_absolute():
                p = base / p
            if not p.exists():
                raise ConfigError(f"dataset: file {p} does not exist")
            self.path = str(p)
        elif self.kind == "objective":
            if self.name not in OBJECTIVES:
                raise ConfigError(f"dataset: objective name must be one of {OBJECTIVES}, got {self.name!r}")
            if self.name == "shifted_quadratic" and not self.center:
                raise ConfigError("dataset: shifted_quadratic needs a center")
        else:
            raise ConfigError(f"dataset: unknown kind {self.kind!r}")


@dataclass
class ModelConfig:
    hidden: list = field(default_factory=lambda: [32])
    activation: str = "tanh"
    loss: str = "cross-entropy"


@dataclass
class ScheduleConfig:
    eta: float = 0.01
    lam: float = 1e-4
    homotopy: bool = True
    freeze_epoch: Optional[int] = None
    decay_epochs: list = field(default_factory=list)
    decay_factor: float = 0.1


@dataclass
class OptimizerConfig:
    name: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.9
    prox_scaling: str = "base"


@dataclass
class WarmstartConfig:
    epochs: int = 0
    eta: float = 0.01


@dataclass
class TrainConfig:
    algorithm: str
    epochs: int
    dataset: DatasetConfig
    model: ModelConfig = field(default_factory=ModelConfig)
    reg: dict = field(default_factory=lambda: {"kind": "binary-l1"})
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    warmstart: WarmstartConfig = field(default_factory=WarmstartConfig)
    batch_size: int = 32
    seeds: list = field(default_factory=lambda: [0])
    log_every: int = 1
    out: str = "runs"

    @property
    def reg_spec(self) -> RegSpec:
        return RegSpec(**self.reg)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path(".")) -> "TrainConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        for key in ("algorithm", "dataset", "epochs"):
            if key not in raw:
                raise ConfigError(f"missing required field {key!r}")
        _check_keys(raw, cls, "config")
        kw: dict[str, Any] = dict(raw)
        nested = {"dataset": DatasetConfig, "model": ModelConfig, "schedule": ScheduleConfig,
                  "optimizer": OptimizerConfig, "warmstart": WarmstartConfig}
        for key, sub in nested.items():
            if key in kw:
                if not isinstance(kw[key], dict):
                    raise ConfigError(f"{key} must be a mapping")
                _check_keys(kw[key], sub, key)
                kw[key] = sub(**kw[key])
        cfg = cls(**kw)
        _coerce_floats(cfg.schedule, ("eta", "lam", "decay_factor"))
        _coerce_floats(cfg.optimizer, ("beta1", "beta2", "eps", "momentum"))
        _coerce_floats(cfg.warmstart, ("eta",))
        _coerce_floats(cfg.dataset, ("spread", "separation"))
        cfg.validate(base)
        return cfg

    def validate(self, base: Path = Path(".")):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not isinstance(self.epochs, int) or self.epochs < 0:
            raise ConfigError("epochs must be a nonnegative integer")
        self.dataset.validate(base)
        try:
            self.reg_spec
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"reg: {exc}") from None
        fe = self.schedule.freeze_epoch
        if fe is not None and not 0 <= fe <= self.epochs:
            raise ConfigError("schedule.freeze_epoch must lie in [0, epochs]")
        if self.schedule.eta <= 0 or self.schedule.lam < 0:
            raise ConfigError("schedule: eta must be positive and lam nonnegative")
        if self.optimizer.name not in ("sgd", "momentum", "adam"):
            raise ConfigError(f"optimizer: unknown name {self.optimizer.name!r}")
        if self.optimizer.prox_scaling not in ("base", "adaptive"):
            raise ConfigError("optimizer.prox_scaling must be 'base' or 'adaptive'")
        if not self.seeds or not all(isinstance(s, int) for s in self.seeds):
            raise ConfigError("seeds must be a nonempty list of integers")
        if self.batch_size < 1 or self.log_every < 1:
            raise ConfigError("batch_size and log_every must be >= 1")
        if self.model.activation not in ("tanh", "relu") or self.model.loss not in ("cross-entropy", "squared"):
            raise ConfigError("model: unsupported activation or loss")


def _coerce_floats(obj, names):
    # YAML 1.1 reads "1e-4" as a string
    for name in names:
        value = getattr(obj, name)
        try:
            setattr(obj, name, float(value))
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {value!r}") from None


def _check_keys(raw: dict, cls, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")


def load_config(path) -> TrainConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return TrainConfig.from_dict(raw, base=path.parent)
