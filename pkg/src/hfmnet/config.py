"""Training and evaluation configuration.

All knobs the training loop and grid runner expose, with the defaults used
throughout the test suite. Config files are TOML with the same key names
under a ``[training]`` table, e.g.::

    [training]
    optimizer = "adam"
    learning_rate = 0.01
    max_epochs = 5000
    patience = 100
    min_improvement = 1e-6
    cell_activation = "relu"
    extrapolation_margin = 0.0
    workers = 1
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError

_FIELD_KEYS = (
    "optimizer",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "max_epochs",
    "patience",
    "min_improvement",
    "cell_activation",
    "extrapolation_margin",
    "workers",
)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_epochs: int = 5000
    patience: int = 100
    min_improvement: float = 1e-6
    cell_activation: str = "relu"  # candidate/output activation of recurrent cells
    extrapolation_margin: float = 0.0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.optimizer not in ("adam", "sgd"):
            raise DataError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.cell_activation not in ("relu", "tanh"):
            raise DataError(
                f"cell_activation must be 'relu' or 'tanh', got {self.cell_activation!r}"
            )
        if self.max_epochs < 1:
            raise DataError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise DataError(f"patience must be >= 1, got {self.patience}")
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.workers < 1:
            raise DataError(f"workers must be >= 1, got {self.workers}")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "TrainConfig":
        unknown = set(mapping) - set(_FIELD_KEYS)
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**mapping)

    @classmethod
    def from_toml(cls, path) -> "TrainConfig":
        try:
            with open(Path(path), "rb") as fh:
                doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"cannot parse config {path}: {exc}") from exc
        table = doc.get("training", doc)
        if not isinstance(table, dict):
            raise DataError(f"config {path} must contain a [training] table")
        return cls.from_mapping(table)
