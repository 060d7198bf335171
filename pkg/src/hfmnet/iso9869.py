"""Average-method U-value, convergence trace, stability check, metrics.

The average method estimates thermal transmittance as the ratio of summed
heat flux to summed interior/exterior air temperature difference over the
whole record. Sums are accumulated in a single forward pass with exact
(error-free) compensated summation, so results are deterministic, do not
depend on sample order, and the running trace ends bit-for-bit on the
full-series estimate.

The stability check here is a deliberately simplified, non-normative
substitute for the standard's full convergence criteria: the record must
span at least 72 h, and dropping the final window must move the estimate
by at most ``tol`` relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .series import MeasurementSeries

DEFAULT_EPS_DENOMINATOR = 1e-9  # K·count; below this the ratio is meaningless
MIN_SPAN_S = 72.0 * 3600.0
DEFAULT_WINDOW_S = 24.0 * 3600.0
DEFAULT_STABILITY_TOL = 0.05


class DegenerateTemperatureDifference(DataError):
    """Summed ΔT is too close to zero to carry a usable gradient."""


class SpanTooShort(DataError):
    """Series does not span enough time for the requested check."""


class LengthMismatch(DataError):
    """Paired sequences differ in length (or are empty)."""


class EmptyInput(DataError):
    """Metric computation received empty sequences."""


class ZeroReference(DataError):
    """Relative difference against a zero reference value."""


class _ExactSum:
    """Error-free accumulator (Shewchuk partials, the math.fsum scheme).

    ``value`` is the correctly rounded sum of everything added so far, so
    results are independent of addition order and a running prefix ends
    bit-for-bit on the whole-series sum. Inputs are finite by series
    invariant.
    """

    __slots__ = ("_partials",)

    def __init__(self) -> None:
        self._partials: list[float] = []

    def add(self, x: float) -> None:
        partials = self._partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    @property
    def value(self) -> float:
        return math.fsum(self._partials)


@dataclass(frozen=True)
class UValueEstimate:
    """Average-method estimate over some sample window.

    ``reverse_flux`` warns that the estimate came out negative, which means
    the flux sensor sign convention opposes the interior-minus-exterior
    temperature difference; it is surfaced, not treated as an error.
    """

    u: float  # W/(m²K)
    n_samples: int
    mean_delta_t: float  # K
    reverse_flux: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.u):
            raise DataError(f"U estimate must be finite, got {self.u!r}")
        if self.n_samples < 2:
            raise DataError(f"U estimate needs at least 2 samples, got {self.n_samples}")


def average_u_value(
    series: MeasurementSeries, eps_denominator: float = DEFAULT_EPS_DENOMINATOR
) -> UValueEstimate:
    """U = Σ q_j / Σ (T_i − T_e)_j over all samples of the series."""
    q_sum = _ExactSum()
    dt_sum = _ExactSum()
    flux = series.heat_flux
    delta_t = series.delta_t
    for j in range(len(series)):
        q_sum.add(float(flux[j]))
        dt_sum.add(float(delta_t[j]))
    denominator = dt_sum.value
    if abs(denominator) < eps_denominator:
        raise DegenerateTemperatureDifference(
            f"|Σ ΔT| = {abs(denominator):.3e} K·count is below {eps_denominator:.3e};"
            " no usable temperature gradient"
        )
    u = q_sum.value / denominator
    return UValueEstimate(
        u=u,
        n_samples=len(series),
        mean_delta_t=denominator / len(series),
        reverse_flux=u < 0.0,
    )


@dataclass(frozen=True)
class UValueTrace:
    """Running average-method estimates over growing sample prefixes.

    ``end_indices[k]`` is the inclusive last sample index of the prefix that
    produced ``estimates[k]``. Prefixes whose summed ΔT falls under the
    degeneracy threshold are skipped and recorded in ``degenerate_indices``.
    """

    estimates: tuple[UValueEstimate, ...]
    end_indices: tuple[int, ...]
    degenerate_indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.estimates)


def running_u_trace(
    series: MeasurementSeries, eps_denominator: float = DEFAULT_EPS_DENOMINATOR
) -> UValueTrace:
    """Estimate per prefix 0..=k for k ≥ 1, with the same accumulation order
    as :func:`average_u_value` so the final element matches it bit-for-bit."""
    q_sum = _ExactSum()
    dt_sum = _ExactSum()
    flux = series.heat_flux
    delta_t = series.delta_t
    estimates: list[UValueEstimate] = []
    ends: list[int] = []
    degenerate: list[int] = []
    for k in range(len(series)):
        q_sum.add(float(flux[k]))
        dt_sum.add(float(delta_t[k]))
        if k < 1:
            continue
        denominator = dt_sum.value
        if abs(denominator) < eps_denominator:
            degenerate.append(k)
            continue
        u = q_sum.value / denominator
        estimates.append(
            UValueEstimate(
                u=u,
                n_samples=k + 1,
                mean_delta_t=denominator / (k + 1),
                reverse_flux=u < 0.0,
            )
        )
        ends.append(k)
    return UValueTrace(
        estimates=tuple(estimates),
        end_indices=tuple(ends),
        degenerate_indices=tuple(degenerate),
    )


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the simplified two-condition stability check."""

    passed: bool
    span_s: float
    window_s: float
    tol: float
    u_full: UValueEstimate
    u_truncated: UValueEstimate
    relative_change: float


def stability_check(
    series: MeasurementSeries,
    window_s: float = DEFAULT_WINDOW_S,
    tol: float = DEFAULT_STABILITY_TOL,
) -> StabilityReport:
    """True iff the span reaches 72 h and dropping the final ``window_s``
    moves the average-method estimate by at most ``tol`` relative."""
    span = series.duration_s
    if span < 3.0 * window_s:
        raise SpanTooShort(
            f"series spans {span / 3600.0:.1f} h; stability check needs at least "
            f"3 × window = {3.0 * window_s / 3600.0:.1f} h"
        )
    n = len(series)
    dropped = math.ceil(window_s / series.step_s)
    n_keep = n - dropped
    u_full = average_u_value(series)
    u_truncated = average_u_value(series.slice(0, n_keep))
    if u_full.u == 0.0:
        relative_change = 0.0 if u_truncated.u == 0.0 else math.inf
    else:
        relative_change = abs(u_full.u - u_truncated.u) / abs(u_full.u)
    passed = span >= MIN_SPAN_S and relative_change <= tol
    return StabilityReport(
        passed=passed,
        span_s=span,
        window_s=window_s,
        tol=tol,
        u_full=u_full,
        u_truncated=u_truncated,
        relative_change=relative_change,
    )


@dataclass(frozen=True)
class MetricSet:
    """RMSE / MSE / MAE between a predicted and a measured flux sequence."""

    rmse: float  # W/m²
    mse: float  # (W/m²)²
    mae: float  # W/m²


def metrics(predicted, actual) -> MetricSet:
    """mse = mean((p−a)²), rmse = sqrt(mse), mae = mean(|p−a|)."""
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1:
        raise LengthMismatch(f"predicted {p.shape} vs actual {a.shape}")
    if p.size == 0:
        raise EmptyInput("metrics need at least one sample")
    d = p - a
    mse = float(np.mean(d * d))
    mae = float(np.mean(np.abs(d)))
    return MetricSet(rmse=math.sqrt(mse), mse=mse, mae=mae)


def relative_difference(predicted_u: float, measured_u: float) -> float:
    """|measured − predicted| / |measured|."""
    if measured_u == 0.0:
        raise ZeroReference("relative difference against measured U = 0")
    return abs(measured_u - predicted_u) / abs(measured_u)
