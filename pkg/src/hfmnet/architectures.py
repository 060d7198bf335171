"""Reference architectures, z-score normalization, training, prediction.

The four study architectures map per-step (interior, exterior) air
temperatures to a heat-flux prediction:

    mlp3        Dense(3, relu) → Dense(1, identity)
    lstm100     LSTM(100)      → Dense(1, identity)
    gru100      GRU(100)       → Dense(1, identity)
    lstmgru100  LSTM(50) → GRU(50) → Dense(1, identity)

Generalised names (``mlp8``, ``lstm16``, ``gru16``, ``lstm8gru8``) build
downsized variants with the same shape. Measured heat flux is never a
network input: after the training segment the model sees temperatures
only, which is the whole point of relocating the flux sensor.

Training is full-batch gradient descent on the chronological training
segment with z-score normalization fitted on that segment alone.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .errors import DataError, HfmError, TrainingError
from .iso9869 import UValueEstimate, average_u_value
from .nn_engine import (
    ActivationKind,
    LayerSpec,
    NetworkSpec,
    ParamSet,
    SequenceNet,
    make_optimizer,
    mse_loss,
    params_from_payload,
    params_to_payload,
)
from .series import MeasurementSeries, SplitSpec, SplitTooSmall, split

CANONICAL_ARCHITECTURES = ("mlp3", "lstm100", "gru100", "lstmgru100")

_MLP_RE = re.compile(r"^mlp(\d+)$")
_LSTM_RE = re.compile(r"^lstm(\d+)$")
_GRU_RE = re.compile(r"^gru(\d+)$")
_LSTMGRU_RE = re.compile(r"^lstm(\d+)gru(\d+)$")
_LSTMGRU_TOTAL_RE = re.compile(r"^lstmgru(\d+)$")


class UnknownArchitecture(HfmError):
    """Architecture name does not match any known pattern."""


class ConstantChannel(DataError):
    """A channel is constant on the training segment; z-scoring impossible."""


class DivergedLoss(TrainingError):
    """Training loss became non-finite."""


def build(name: str, cell_activation: str = "relu") -> NetworkSpec:
    """Resolve an architecture name into a NetworkSpec.

    ``cell_activation`` selects the candidate/output activation of the
    recurrent cells ('relu' or 'tanh'); gates are always sigmoid.
    """
    key = name.strip().lower()
    act = ActivationKind.from_name(cell_activation)
    out = LayerSpec(kind="dense", width=1, activation=ActivationKind.IDENTITY)
    if m := _MLP_RE.match(key):
        hidden = LayerSpec(kind="dense", width=int(m.group(1)), activation=ActivationKind.RELU)
        return NetworkSpec(name=key, layers=(hidden, out))
    if m := _LSTMGRU_TOTAL_RE.match(key):
        # lstmgruN stacks an LSTM and a GRU layer of N/2 units each.
        total = int(m.group(1))
        if total < 2 or total % 2:
            raise UnknownArchitecture(
                f"{name!r} needs an even unit total; use explicit 'lstm{{a}}gru{{b}}'"
            )
        half = total // 2
        return NetworkSpec(
            name=key,
            layers=(
                LayerSpec(kind="lstm", width=half, activation=act),
                LayerSpec(kind="gru", width=half, activation=act),
                out,
            ),
        )
    if m := _LSTMGRU_RE.match(key):
        return NetworkSpec(
            name=key,
            layers=(
                LayerSpec(kind="lstm", width=int(m.group(1)), activation=act),
                LayerSpec(kind="gru", width=int(m.group(2)), activation=act),
                out,
            ),
        )
    if m := _LSTM_RE.match(key):
        return NetworkSpec(
            name=key, layers=(LayerSpec(kind="lstm", width=int(m.group(1)), activation=act), out)
        )
    if m := _GRU_RE.match(key):
        return NetworkSpec(
            name=key, layers=(LayerSpec(kind="gru", width=int(m.group(1)), activation=act), out)
        )
    raise UnknownArchitecture(
        f"unknown architecture {name!r}; expected one of {CANONICAL_ARCHITECTURES} "
        "or a sized variant like 'lstm16' / 'lstm8gru8'"
    )


_CHANNELS = ("t_internal", "t_external", "heat_flux")


@dataclass(frozen=True)
class Normalizer:
    """Per-channel z-scoring for (T_i, T_e, q), fitted on training data only."""

    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,)

    @classmethod
    def fit(cls, series: MeasurementSeries) -> "Normalizer":
        stacked = np.stack([series.t_internal, series.t_external, series.heat_flux])
        mean = stacked.mean(axis=1)
        std = stacked.std(axis=1)
        for k, s in enumerate(std):
            if s == 0.0:
                raise ConstantChannel(
                    f"channel {_CHANNELS[k]!r} is constant on the training segment"
                )
        return cls(mean=mean, std=std)

    def apply_inputs(self, series: MeasurementSeries) -> np.ndarray:
        """Normalized (T, 2) temperature inputs."""
        x = np.stack([series.t_internal, series.t_external], axis=1)
        return (x - self.mean[:2]) / self.std[:2]

    def normalize_flux(self, q) -> np.ndarray:
        return (np.asarray(q, dtype=np.float64) - self.mean[2]) / self.std[2]

    def denormalize_flux(self, y) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.std[2] + self.mean[2]


@dataclass(frozen=True)
class TrainingRun:
    """Everything needed to reproduce and reuse one fitted model."""

    spec: NetworkSpec
    split_spec: SplitSpec
    seed: int
    config: TrainConfig
    epoch_losses: tuple[float, ...]
    params: ParamSet
    normalizer: Normalizer

    @property
    def epochs_run(self) -> int:
        return len(self.epoch_losses)

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def train(
    spec: NetworkSpec,
    series: MeasurementSeries,
    split_spec: SplitSpec,
    seed: int,
    config: TrainConfig | None = None,
) -> TrainingRun:
    """Fit the network on the leading training segment.

    Full-batch descent; the per-epoch loss is recorded *before* the update
    so `epoch_losses[0]` is the loss of the freshly initialised network.
    Stops at ``max_epochs`` or once the best loss has not improved by
    ``min_improvement`` for ``patience`` consecutive epochs. Validation
    samples are never read.
    """
    config = config or TrainConfig()
    train_series, _ = split(series, split_spec)
    if len(train_series) <= 2:
        raise SplitTooSmall(
            f"training needs more than 2 samples, got {len(train_series)}"
        )
    normalizer = Normalizer.fit(train_series)
    inputs = normalizer.apply_inputs(train_series)
    targets = normalizer.normalize_flux(train_series.heat_flux)

    net = SequenceNet(spec)
    params = net.init_params(seed)
    optimizer = make_optimizer(
        config.optimizer,
        learning_rate=config.learning_rate,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
    )

    losses: list[float] = []
    best = math.inf
    stale = 0
    for _ in range(config.max_epochs):
        outputs, caches = net.forward(params, inputs)
        loss, d_outputs = mse_loss(outputs, targets)
        if not math.isfinite(loss):
            raise DivergedLoss(
                f"training loss became non-finite at epoch {len(losses)} "
                f"({spec.name}, seed {seed})"
            )
        losses.append(loss)
        if loss < best - config.min_improvement:
            best = loss
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
        grad = net.backward(params, caches, d_outputs)
        optimizer.step(params, grad)

    return TrainingRun(
        spec=spec,
        split_spec=split_spec,
        seed=seed,
        config=config,
        epoch_losses=tuple(losses),
        params=params,
        normalizer=normalizer,
    )


def predict(run: TrainingRun, series: MeasurementSeries) -> np.ndarray:
    """Heat-flux prediction over the full series, in W/m².

    The network is run chronologically from the first sample, so recurrent
    state at the split boundary is whatever the training segment left
    behind — never reset mid-series. Measured flux is not an input.
    """
    net = SequenceNet(run.spec)
    inputs = run.normalizer.apply_inputs(series)
    outputs = net.outputs(run.params, inputs)
    return run.normalizer.denormalize_flux(outputs)


@dataclass(frozen=True)
class PredictedUValue:
    """Average-method estimates computed from predicted flux."""

    validation: UValueEstimate
    full_series: UValueEstimate


def predicted_u_value(
    run: TrainingRun, series: MeasurementSeries, split_spec: SplitSpec
) -> PredictedUValue:
    """Average-method U from predicted flux and measured temperatures.

    Primary variant uses the validation segment; the full-series variant
    is returned alongside for comparison.
    """
    predicted = predict(run, series)
    predicted_series = series.with_heat_flux(predicted)
    _, predicted_validation = split(predicted_series, split_spec)
    return PredictedUValue(
        validation=average_u_value(predicted_validation),
        full_series=average_u_value(predicted_series),
    )


RUN_FORMAT_NAME = "hfmnet-run"
RUN_FORMAT_VERSION = 1


def run_to_payload(run: TrainingRun) -> dict:
    return {
        "format": RUN_FORMAT_NAME,
        "version": RUN_FORMAT_VERSION,
        "architecture": run.spec.name,
        "input_width": run.spec.input_width,
        "layers": [
            {"kind": ls.kind, "width": ls.width, "activation": ls.activation.value}
            for ls in run.spec.layers
        ],
        "split": {"train_fraction": run.split_spec.train_fraction, "label": run.split_spec.label},
        "seed": run.seed,
        "config": run.config.as_dict(),
        "epoch_losses": list(run.epoch_losses),
        "normalizer": {"mean": run.normalizer.mean.tolist(), "std": run.normalizer.std.tolist()},
        "params": params_to_payload(run.params),
    }


def run_from_payload(payload: dict) -> TrainingRun:
    if payload.get("format") != RUN_FORMAT_NAME:
        raise DataError(f"not a training-run checkpoint: format={payload.get('format')!r}")
    if payload.get("version") != RUN_FORMAT_VERSION:
        raise DataError(f"unsupported run checkpoint version {payload.get('version')!r}")
    spec = NetworkSpec(
        name=payload["architecture"],
        layers=tuple(
            LayerSpec(
                kind=entry["kind"],
                width=int(entry["width"]),
                activation=ActivationKind.from_name(entry["activation"]),
            )
            for entry in payload["layers"]
        ),
        input_width=int(payload["input_width"]),
    )
    return TrainingRun(
        spec=spec,
        split_spec=SplitSpec(
            train_fraction=payload["split"]["train_fraction"], label=payload["split"]["label"]
        ),
        seed=int(payload["seed"]),
        config=TrainConfig.from_mapping(payload["config"]),
        epoch_losses=tuple(payload["epoch_losses"]),
        params=params_from_payload(payload["params"]),
        normalizer=Normalizer(
            mean=np.asarray(payload["normalizer"]["mean"], dtype=np.float64),
            std=np.asarray(payload["normalizer"]["std"], dtype=np.float64),
        ),
    )


def save_run(run: TrainingRun, path) -> None:
    Path(path).write_text(json.dumps(run_to_payload(run), indent=2) + "\n", encoding="utf-8")


def load_run(path) -> TrainingRun:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse run checkpoint {path}: {exc}") from exc
    return run_from_payload(payload)
