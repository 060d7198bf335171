"""Heat-flux measurement series: ingestion, validation, chronological splits.

A series holds uniformly sampled triples of interior air temperature,
exterior air temperature and heat flux. The canonical on-disk format is
UTF-8 CSV with the exact header ``timestamp,t_internal_c,t_external_c,
heat_flux_w_m2``, ISO 8601 timestamps carrying a UTC offset, and one row
per sample. Sampling must be strictly regular; irregular or non-monotonic
data is rejected at parse time, never repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DataError

CSV_HEADER = "timestamp,t_internal_c,t_external_c,heat_flux_w_m2"
DEFAULT_STEP_S = 600.0


class SeriesError(DataError):
    """Malformed or inconsistent measurement series."""


class MissingColumn(SeriesError):
    """CSV header does not match the canonical column set."""


class NonMonotonicTimestamp(SeriesError):
    """Timestamps are not strictly increasing."""


class IrregularStep(SeriesError):
    """Consecutive timestamps do not differ by a constant step."""


class UnparsableValue(SeriesError):
    """A cell could not be parsed as a timestamp or finite number."""


class SplitTooSmall(SeriesError):
    """A train/validation part would contain fewer than 2 samples."""


@dataclass(frozen=True)
class Sample:
    """One measurement instant: two air temperatures and the heat flux."""

    timestamp: datetime
    t_internal: float  # °C
    t_external: float  # °C
    heat_flux: float  # W/m²


def _as_channel(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise SeriesError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise SeriesError(f"{name} contains a non-finite value at index {bad}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    """Uniformly sampled measurement record.

    ``start`` is the timestamp of the first sample (timezone-aware, stored
    in UTC); sample ``i`` is at ``start + i * step_s``. Channel arrays are
    read-only float64 so instances can be shared across threads.
    """

    start: datetime
    step_s: float
    t_internal: np.ndarray
    t_external: np.ndarray
    heat_flux: np.ndarray

    def __post_init__(self) -> None:
        if self.start.tzinfo is None:
            raise SeriesError("series start timestamp must be timezone-aware")
        object.__setattr__(self, "start", self.start.astimezone(timezone.utc))
        step = float(self.step_s)
        if not math.isfinite(step) or step <= 0.0:
            raise SeriesError(f"step must be a positive duration, got {step!r}")
        object.__setattr__(self, "step_s", step)
        for name in ("t_internal", "t_external", "heat_flux"):
            object.__setattr__(self, name, _as_channel(getattr(self, name), name))
        n = len(self.t_internal)
        if len(self.t_external) != n or len(self.heat_flux) != n:
            raise SeriesError("channel arrays must share one length")
        if n < 2:
            raise SeriesError(f"series must contain at least 2 samples, got {n}")

    def __len__(self) -> int:
        return len(self.heat_flux)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MeasurementSeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.step_s == other.step_s
            and np.array_equal(self.t_internal, other.t_internal)
            and np.array_equal(self.t_external, other.t_external)
            and np.array_equal(self.heat_flux, other.heat_flux)
        )

    def timestamp_at(self, i: int) -> datetime:
        return self.start + timedelta(seconds=self.step_s) * i

    @property
    def timestamps(self) -> list[datetime]:
        return [self.timestamp_at(i) for i in range(len(self))]

    @property
    def duration_s(self) -> float:
        """Span between first and last sample: N samples cover N-1 steps."""
        return (len(self) - 1) * self.step_s

    @property
    def delta_t(self) -> np.ndarray:
        """Interior-minus-exterior temperature difference per sample."""
        return self.t_internal - self.t_external

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]

    def __getitem__(self, i: int) -> Sample:
        return Sample(
            timestamp=self.timestamp_at(i),
            t_internal=float(self.t_internal[i]),
            t_external=float(self.t_external[i]),
            heat_flux=float(self.heat_flux[i]),
        )

    def slice(self, lo: int, hi: int) -> "MeasurementSeries":
        """Contiguous sub-series over sample indices [lo, hi)."""
        return MeasurementSeries(
            start=self.timestamp_at(lo),
            step_s=self.step_s,
            t_internal=self.t_internal[lo:hi],
            t_external=self.t_external[lo:hi],
            heat_flux=self.heat_flux[lo:hi],
        )

    def with_heat_flux(self, heat_flux) -> "MeasurementSeries":
        """Same instants and temperatures, replaced flux channel."""
        return MeasurementSeries(
            start=self.start,
            step_s=self.step_s,
            t_internal=self.t_internal,
            t_external=self.t_external,
            heat_flux=heat_flux,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/validation split by leading fraction.

    The training part takes the first ``floor(train_fraction * N)`` samples;
    the remainder is validation. ``label`` is the human-readable ratio used
    in reports and seed derivation (defaults to the exact fraction).
    """

    train_fraction: float
    label: str = ""

    def __post_init__(self) -> None:
        f = float(self.train_fraction)
        if not 0.0 < f < 1.0:
            raise SeriesError(f"train_fraction must be in (0, 1), got {f!r}")
        object.__setattr__(self, "train_fraction", f)
        if not self.label:
            frac = Fraction(f).limit_denominator(10_000)
            object.__setattr__(self, "label", f"{frac.numerator}/{frac.denominator}")

    @classmethod
    def from_string(cls, text: str) -> "SplitSpec":
        """Parse ratios like ``1/2`` or plain fractions like ``0.25``."""
        text = text.strip()
        try:
            if "/" in text:
                num, den = text.split("/", 1)
                value = int(num) / int(den)
            else:
                value = float(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise SeriesError(f"cannot parse split ratio {text!r}") from exc
        return cls(train_fraction=value, label=text if "/" in text else "")

    def train_count(self, n: int) -> int:
        return math.floor(self.train_fraction * n)


def split(series: MeasurementSeries, spec: SplitSpec) -> tuple[MeasurementSeries, MeasurementSeries]:
    """Chronological split; train part first, no shuffling.

    Raises SplitTooSmall when either part would hold fewer than 2 samples.
    """
    n = len(series)
    n_train = spec.train_count(n)
    if n_train < 2 or n - n_train < 2:
        raise SplitTooSmall(
            f"split {spec.label} of {n} samples gives {n_train} train / "
            f"{n - n_train} validation; both parts need at least 2"
        )
    return series.slice(0, n_train), series.slice(n_train, n)


def _parse_timestamp(text: str, row: int) -> datetime:
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise UnparsableValue(f"row {row}: cannot parse timestamp {text!r}") from exc
    if ts.tzinfo is None:
        raise UnparsableValue(f"row {row}: timestamp {text!r} lacks a UTC offset")
    return ts.astimezone(timezone.utc)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise UnparsableValue(f"row {row}: cannot parse {column}={text!r}") from exc
    if not math.isfinite(value):
        raise UnparsableValue(f"row {row}: {column}={text!r} is not finite")
    return value


def from_csv_text(text: str) -> MeasurementSeries:
    """Parse the canonical CSV format from an in-memory string."""
    lines = text.splitlines()
    if not lines:
        raise MissingColumn("empty file: expected header " + CSV_HEADER)
    header = lines[0].strip().lstrip("﻿")
    if header != CSV_HEADER:
        raise MissingColumn(f"expected header {CSV_HEADER!r}, got {header!r}")

    timestamps: list[datetime] = []
    t_int: list[float] = []
    t_ext: list[float] = []
    flux: list[float] = []
    # Row numbers are 1-based over data rows, matching what a user sees
    # when the header is line 1 of the file.
    row = 0
    for line in lines[1:]:
        if not line.strip():
            continue
        row += 1
        fields = line.split(",")
        if len(fields) != 4:
            raise UnparsableValue(f"row {row}: expected 4 columns, got {len(fields)}")
        ts = _parse_timestamp(fields[0], row)
        if timestamps:
            if ts <= timestamps[-1]:
                raise NonMonotonicTimestamp(
                    f"row {row}: timestamp {fields[0].strip()!r} does not increase"
                )
        timestamps.append(ts)
        t_int.append(_parse_float(fields[1], row, "t_internal_c"))
        t_ext.append(_parse_float(fields[2], row, "t_external_c"))
        flux.append(_parse_float(fields[3], row, "heat_flux_w_m2"))

    if len(timestamps) < 2:
        raise SeriesError(f"series must contain at least 2 samples, got {len(timestamps)}")
    step_td = timestamps[1] - timestamps[0]
    for i in range(2, len(timestamps)):
        if timestamps[i] - timestamps[i - 1] != step_td:
            raise IrregularStep(
                f"row {i + 1}: step {(timestamps[i] - timestamps[i - 1]).total_seconds()} s "
                f"differs from the series step {step_td.total_seconds()} s"
            )
    return MeasurementSeries(
        start=timestamps[0],
        step_s=step_td.total_seconds(),
        t_internal=t_int,
        t_external=t_ext,
        heat_flux=flux,
    )


def parse_csv(path) -> MeasurementSeries:
    """Read and validate a series file in the canonical CSV format."""
    return from_csv_text(Path(path).read_text(encoding="utf-8"))


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def to_csv_text(series: MeasurementSeries) -> str:
    """Serialize to the canonical CSV format.

    Floats are written with shortest round-trip repr so that
    ``from_csv_text(to_csv_text(s)) == s`` holds bit-exactly.
    """
    out = [CSV_HEADER]
    for i in range(len(series)):
        out.append(
            f"{format_timestamp(series.timestamp_at(i))},"
            f"{float(series.t_internal[i])!r},"
            f"{float(series.t_external[i])!r},"
            f"{float(series.heat_flux[i])!r}"
        )
    return "\n".join(out) + "\n"


def write_csv(series: MeasurementSeries, path) -> None:
    Path(path).write_text(to_csv_text(series), encoding="utf-8")
