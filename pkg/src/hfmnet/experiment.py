"""Experiment grid: architectures × split ratios, with study-table output.

Runs every (architecture, split, seed) combination, evaluates RMSE/MSE/MAE
on the validation segment, compares predicted against measured U-values
and marks the best architecture per split by RMSE. Every cell derives its
own seed from the global seed, the architecture name and the split label,
so adding rows never perturbs existing ones and the grid is independent of
execution order and of the worker count.

A failed cell (e.g. diverged training) is recorded with its error message;
the rest of the grid still completes.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import iso9869
from .architectures import build, predict, predicted_u_value, train
from .config import TrainConfig
from .errors import DataError, HfmError
from .iso9869 import MetricSet
from .nn_engine import derive_seed
from .series import MeasurementSeries, SplitSpec, split
from .series import format_timestamp

REPORT_FORMAT_NAME = "hfmnet-report"
REPORT_FORMAT_VERSION = 1
CELL_SEED_NAMESPACE = "hfmnet-cell"


@dataclass(frozen=True)
class SeedResult:
    """Outcome of one trained cell for one global seed."""

    global_seed: int
    cell_seed: int
    metrics: MetricSet | None
    predicted_u_validation: float | None
    predicted_u_full: float | None
    epochs_run: int | None
    final_loss: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class GridCell:
    """One (architecture, split) row aggregated over the seed list."""

    architecture: str
    split_label: str
    results: tuple[SeedResult, ...]
    best_in_split: bool = False

    @property
    def successes(self) -> tuple[SeedResult, ...]:
        return tuple(r for r in self.results if r.ok)

    @property
    def ok(self) -> bool:
        return bool(self.successes)

    @property
    def error(self) -> str | None:
        if self.ok:
            return None
        return "; ".join(r.error or "unknown" for r in self.results)

    def _mean(self, getter) -> float | None:
        values = [getter(r) for r in self.successes]
        return float(np.mean(values)) if values else None

    @property
    def rmse(self) -> float | None:
        return self._mean(lambda r: r.metrics.rmse)

    @property
    def mse(self) -> float | None:
        return self._mean(lambda r: r.metrics.mse)

    @property
    def mae(self) -> float | None:
        return self._mean(lambda r: r.metrics.mae)

    @property
    def predicted_u_validation(self) -> float | None:
        return self._mean(lambda r: r.predicted_u_validation)

    @property
    def predicted_u_full(self) -> float | None:
        return self._mean(lambda r: r.predicted_u_full)

    def seed_spread(self, getter) -> tuple[float, float] | None:
        values = [getter(r) for r in self.successes]
        return (min(values), max(values)) if values else None


@dataclass(frozen=True)
class SplitSummary:
    label: str
    train_fraction: float
    n_train: int
    n_validation: int
    measured_u_validation: float


@dataclass(frozen=True)
class UValueReport:
    """The study-table artifact: measured vs predicted U across the grid."""

    global_seeds: tuple[int, ...]
    config: TrainConfig
    n_samples: int
    step_s: float
    start_iso: str
    measured_u_full: float
    splits: tuple[SplitSummary, ...]
    cells: tuple[GridCell, ...]

    def split_summary(self, label: str) -> SplitSummary:
        for summary in self.splits:
            if summary.label == label:
                return summary
        raise KeyError(label)

    def relative_difference(self, cell: GridCell) -> float | None:
        """Validation-segment predicted U vs measured U on the same segment."""
        if not cell.ok:
            return None
        measured = self.split_summary(cell.split_label).measured_u_validation
        return iso9869.relative_difference(cell.predicted_u_validation, measured)


def _run_cell(
    series: MeasurementSeries,
    architecture: str,
    split_spec: SplitSpec,
    global_seed: int,
    config: TrainConfig,
):
    cell_seed = derive_seed(
        CELL_SEED_NAMESPACE, global_seed, architecture, split_spec.label
    )
    try:
        spec = build(architecture, cell_activation=config.cell_activation)
        run = train(spec, series, split_spec, seed=cell_seed, config=config)
        predicted = predict(run, series)
        _, validation = split(series, split_spec)
        n_train = len(series) - len(validation)
        cell_metrics = iso9869.metrics(predicted[n_train:], validation.heat_flux)
        estimate = predicted_u_value(run, series, split_spec)
        result = SeedResult(
            global_seed=global_seed,
            cell_seed=cell_seed,
            metrics=cell_metrics,
            predicted_u_validation=estimate.validation.u,
            predicted_u_full=estimate.full_series.u,
            epochs_run=run.epochs_run,
            final_loss=run.final_loss,
        )
        return result, run
    except HfmError as exc:
        result = SeedResult(
            global_seed=global_seed,
            cell_seed=cell_seed,
            metrics=None,
            predicted_u_validation=None,
            predicted_u_full=None,
            epochs_run=None,
            final_loss=None,
            error=f"{type(exc).__name__}: {exc}",
        )
        return result, None


def run_grid(
    series: MeasurementSeries,
    architectures: list[str],
    splits: list[SplitSpec | str],
    seeds: list[int],
    config: TrainConfig | None = None,
    return_runs: bool = False,
):
    """Train the whole grid and assemble the report.

    With ``return_runs`` the trained models come back too, keyed by
    (architecture, split label, global seed), so callers can export plot
    data without retraining.
    """
    config = config or TrainConfig()
    if not architectures or not splits or not seeds:
        raise DataError("grid needs at least one architecture, split and seed")
    split_specs = [s if isinstance(s, SplitSpec) else SplitSpec.from_string(s) for s in splits]

    jobs = [
        (arch, split_spec, seed)
        for arch in architectures
        for split_spec in split_specs
        for seed in seeds
    ]

    def job(args):
        arch, split_spec, seed = args
        return (arch, split_spec.label, seed), _run_cell(series, arch, split_spec, seed, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = dict(pool.map(job, jobs))
    else:
        outcomes = dict(map(job, jobs))
    results = {key: outcome[0] for key, outcome in outcomes.items()}
    runs = {key: outcome[1] for key, outcome in outcomes.items() if outcome[1] is not None}

    cells: list[GridCell] = []
    for arch in architectures:
        for split_spec in split_specs:
            per_seed = tuple(results[(arch, split_spec.label, seed)] for seed in seeds)
            cells.append(
                GridCell(architecture=arch, split_label=split_spec.label, results=per_seed)
            )

    # Best-in-split marker: argmin mean RMSE among successful cells.
    marked: dict[tuple[str, str], bool] = {}
    for split_spec in split_specs:
        candidates = [c for c in cells if c.split_label == split_spec.label and c.ok]
        if candidates:
            best = min(candidates, key=lambda c: c.rmse)
            marked[(best.architecture, best.split_label)] = True
    cells = [
        GridCell(
            architecture=c.architecture,
            split_label=c.split_label,
            results=c.results,
            best_in_split=marked.get((c.architecture, c.split_label), False),
        )
        for c in cells
    ]

    summaries = []
    for split_spec in split_specs:
        train_part, validation = split(series, split_spec)
        summaries.append(
            SplitSummary(
                label=split_spec.label,
                train_fraction=split_spec.train_fraction,
                n_train=len(train_part),
                n_validation=len(validation),
                measured_u_validation=iso9869.average_u_value(validation).u,
            )
        )

    report = UValueReport(
        global_seeds=tuple(seeds),
        config=config,
        n_samples=len(series),
        step_s=series.step_s,
        start_iso=format_timestamp(series.start),
        measured_u_full=iso9869.average_u_value(series).u,
        splits=tuple(summaries),
        cells=tuple(cells),
    )
    return (report, runs) if return_runs else report


@dataclass(frozen=True)
class ExtrapolationReport:
    """Validation timesteps whose inputs left the training range.

    Indices are absolute sample indices into the full series; intervals are
    inclusive [start, end] runs of consecutive flagged samples.
    """

    n_train: int
    margin: float
    flags: tuple[bool, ...]  # one per validation timestep
    channels: tuple[tuple[str, ...], ...]  # offending channels per timestep
    intervals: tuple[tuple[int, int], ...] = field(default=())

    @property
    def any_flagged(self) -> bool:
        return any(self.flags)

    @property
    def flagged_indices(self) -> tuple[int, ...]:
        return tuple(self.n_train + i for i, f in enumerate(self.flags) if f)


def detect_extrapolation(
    series: MeasurementSeries,
    split_spec: SplitSpec,
    margin: float = 0.0,
) -> ExtrapolationReport:
    """Range-based input-space check: flag validation samples whose
    temperatures fall outside the training segment's per-channel range
    widened by ``margin``."""
    train_part, validation = split(series, split_spec)
    n_train = len(train_part)
    channel_data = {
        "t_internal": (train_part.t_internal, validation.t_internal),
        "t_external": (train_part.t_external, validation.t_external),
    }
    n_val = len(validation)
    flags = np.zeros(n_val, dtype=bool)
    offenders: list[list[str]] = [[] for _ in range(n_val)]
    for name, (train_vals, val_vals) in channel_data.items():
        lo = float(np.min(train_vals)) - margin
        hi = float(np.max(train_vals)) + margin
        outside = (val_vals < lo) | (val_vals > hi)
        flags |= outside
        for idx in np.flatnonzero(outside):
            offenders[int(idx)].append(name)

    intervals: list[tuple[int, int]] = []
    run_start: int | None = None
    for i, flagged in enumerate(flags):
        if flagged and run_start is None:
            run_start = i
        elif not flagged and run_start is not None:
            intervals.append((n_train + run_start, n_train + i - 1))
            run_start = None
    if run_start is not None:
        intervals.append((n_train + run_start, n_train + n_val - 1))

    return ExtrapolationReport(
        n_train=n_train,
        margin=margin,
        flags=tuple(bool(f) for f in flags),
        channels=tuple(tuple(o) for o in offenders),
        intervals=tuple(intervals),
    )


def extrapolation_to_payload(report: ExtrapolationReport) -> dict:
    return {
        "n_train": report.n_train,
        "margin": report.margin,
        "n_flagged": sum(report.flags),
        "intervals": [list(iv) for iv in report.intervals],
        "flagged_indices": list(report.flagged_indices),
        "channels": {
            str(report.n_train + i): list(ch)
            for i, ch in enumerate(report.channels)
            if ch
        },
    }


def export_plot_data(run, series: MeasurementSeries, split_spec: SplitSpec, out_dir) -> dict:
    """Write per-timestep prediction and scatter CSVs for plotting.

    ``predictions.csv``: timestamp, measured q, predicted q and a marker
    column that is 1 on the first validation row (the vertical line in the
    study figures). ``scatter.csv``: measured vs predicted flux with the
    segment name. Floats use shortest round-trip repr.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    predicted = predict(run, series)
    n_train = split_spec.train_count(len(series))

    lines = ["timestamp,q_measured_w_m2,q_predicted_w_m2,split_boundary"]
    for i in range(len(series)):
        boundary = 1 if i == n_train else 0
        lines.append(
            f"{format_timestamp(series.timestamp_at(i))},"
            f"{float(series.heat_flux[i])!r},{float(predicted[i])!r},{boundary}"
        )
    predictions_path = out / "predictions.csv"
    predictions_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["q_measured_w_m2,q_predicted_w_m2,segment"]
    for i in range(len(series)):
        segment = "train" if i < n_train else "validation"
        lines.append(f"{float(series.heat_flux[i])!r},{float(predicted[i])!r},{segment}")
    scatter_path = out / "scatter.csv"
    scatter_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    return {"predictions": predictions_path, "scatter": scatter_path}


def _seed_result_payload(r: SeedResult) -> dict:
    return {
        "global_seed": r.global_seed,
        "cell_seed": r.cell_seed,
        "error": r.error,
        "rmse": None if r.metrics is None else r.metrics.rmse,
        "mse": None if r.metrics is None else r.metrics.mse,
        "mae": None if r.metrics is None else r.metrics.mae,
        "predicted_u_validation": r.predicted_u_validation,
        "predicted_u_full": r.predicted_u_full,
        "epochs_run": r.epochs_run,
        "final_loss": r.final_loss,
    }


def report_to_payload(report: UValueReport) -> dict:
    cells = []
    for cell in report.cells:
        cells.append(
            {
                "architecture": cell.architecture,
                "split": cell.split_label,
                "best_in_split": cell.best_in_split,
                "error": cell.error,
                "rmse": cell.rmse,
                "mse": cell.mse,
                "mae": cell.mae,
                "predicted_u_validation": cell.predicted_u_validation,
                "predicted_u_full": cell.predicted_u_full,
                "relative_difference": report.relative_difference(cell),
                "per_seed": [_seed_result_payload(r) for r in cell.results],
            }
        )
    return {
        "format": REPORT_FORMAT_NAME,
        "version": REPORT_FORMAT_VERSION,
        "global_seeds": list(report.global_seeds),
        "config": report.config.as_dict(),
        "series": {
            "n_samples": report.n_samples,
            "step_s": report.step_s,
            "start": report.start_iso,
        },
        "measured_u_full": report.measured_u_full,
        "splits": [
            {
                "label": s.label,
                "train_fraction": s.train_fraction,
                "n_train": s.n_train,
                "n_validation": s.n_validation,
                "measured_u_validation": s.measured_u_validation,
            }
            for s in report.splits
        ],
        "cells": cells,
    }


def report_from_payload(payload: dict) -> UValueReport:
    if payload.get("format") != REPORT_FORMAT_NAME:
        raise DataError(f"not a grid report: format={payload.get('format')!r}")
    if payload.get("version") != REPORT_FORMAT_VERSION:
        raise DataError(f"unsupported report version {payload.get('version')!r}")
    cells = []
    for entry in payload["cells"]:
        results = tuple(
            SeedResult(
                global_seed=r["global_seed"],
                cell_seed=r["cell_seed"],
                metrics=(
                    None
                    if r["rmse"] is None
                    else MetricSet(rmse=r["rmse"], mse=r["mse"], mae=r["mae"])
                ),
                predicted_u_validation=r["predicted_u_validation"],
                predicted_u_full=r["predicted_u_full"],
                epochs_run=r["epochs_run"],
                final_loss=r["final_loss"],
                error=r["error"],
            )
            for r in entry["per_seed"]
        )
        cells.append(
            GridCell(
                architecture=entry["architecture"],
                split_label=entry["split"],
                results=results,
                best_in_split=entry["best_in_split"],
            )
        )
    return UValueReport(
        global_seeds=tuple(payload["global_seeds"]),
        config=TrainConfig.from_mapping(payload["config"]),
        n_samples=payload["series"]["n_samples"],
        step_s=payload["series"]["step_s"],
        start_iso=payload["series"]["start"],
        measured_u_full=payload["measured_u_full"],
        splits=tuple(
            SplitSummary(
                label=s["label"],
                train_fraction=s["train_fraction"],
                n_train=s["n_train"],
                n_validation=s["n_validation"],
                measured_u_validation=s["measured_u_validation"],
            )
            for s in payload["splits"]
        ),
        cells=tuple(cells),
    )


def report_to_json(report: UValueReport) -> str:
    return json.dumps(report_to_payload(report), indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> UValueReport:
    try:
        return report_from_payload(json.loads(text))
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse report JSON: {exc}") from exc


def format_report_table(report: UValueReport) -> str:
    """Human-readable table mirroring the study table's columns."""
    header = (
        f"{'architecture':<14}{'train/val':<11}{'RMSE':>8}{'MSE':>9}{'MAE':>8}"
        f"{'pred U (val)':>14}{'rel diff':>10}  "
    )
    lines = [
        f"measured U (full series): {report.measured_u_full:.4f} W/(m2K)",
        "",
        header.rstrip(),
        "-" * len(header.rstrip()),
    ]
    for cell in report.cells:
        if not cell.ok:
            lines.append(
                f"{cell.architecture:<14}{cell.split_label:<11}  failed: {cell.error}"
            )
            continue
        rel = report.relative_difference(cell)
        marker = " *" if cell.best_in_split else ""
        lines.append(
            f"{cell.architecture:<14}{cell.split_label:<11}"
            f"{cell.rmse:>8.3f}{cell.mse:>9.3f}{cell.mae:>8.3f}"
            f"{cell.predicted_u_validation:>14.4f}{rel * 100.0:>9.2f}%{marker}"
        )
    lines.append("")
    lines.append("* best RMSE within the split ratio")
    return "\n".join(lines) + "\n"
