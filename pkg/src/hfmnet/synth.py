"""Synthetic heat-flux datasets from a lumped RC wall with known U-value.

The wall is a one-dimensional series chain

    interior air —r_si— iface₀ —R₁— iface₁ — … —R_L— iface_L —r_se— exterior air

with node temperatures at the layer interfaces and each layer's
capacitance split evenly between its two bounding interfaces. Interface
nodes with zero capacitance store no energy, so they are eliminated
*exactly* by merging their adjacent resistances in series; a fully
massless wall reduces to the algebraic q = U·ΔT.

Integration is explicit Euler with a fixed sub-step of at most 0.1 × the
smallest nodal time constant C/(1/R_left + 1/R_right); configurations that
would need more than ``MAX_SUBSTEPS_PER_SAMPLE`` sub-steps per sampling
interval are rejected instead of silently coarsened. The sampled heat flux
is the interior-surface flux (T_i − T_first_node)/r_front evaluated on the
exact trajectory; Gaussian measurement noise is added to the sampled
outputs only, never to the state evolution.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError
from .nn_engine import Xoshiro256StarStar
from .series import MeasurementSeries

DEFAULT_SERIES_START = datetime(2019, 2, 22, 14, 0, tzinfo=timezone.utc)
SUBSTEP_SAFETY_FACTOR = 0.1
MAX_SUBSTEPS_PER_SAMPLE = 200_000


class UnstableConfiguration(DataError):
    """Stable explicit integration would need an unreasonable sub-step."""


@dataclass(frozen=True)
class WallSpec:
    """Layered wall: per-layer resistance/capacitance plus surface films."""

    resistances: tuple[float, ...]  # m²K/W, interior-first
    capacitances: tuple[float, ...]  # J/(m²K), same order
    r_si: float = 0.13
    r_se: float = 0.04

    def __post_init__(self) -> None:
        object.__setattr__(self, "resistances", tuple(float(r) for r in self.resistances))
        object.__setattr__(self, "capacitances", tuple(float(c) for c in self.capacitances))
        if not self.resistances:
            raise DataError("wall needs at least one layer")
        if len(self.capacitances) != len(self.resistances):
            raise DataError(
                f"{len(self.resistances)} layer resistances but "
                f"{len(self.capacitances)} capacitances"
            )
        if any(r <= 0 for r in self.resistances) or self.r_si <= 0 or self.r_se <= 0:
            raise DataError("all resistances must be positive")
        if any(c < 0 for c in self.capacitances):
            raise DataError("capacitances must be non-negative")


def true_u(wall: WallSpec) -> float:
    """1 / (r_si + Σ R_layers + r_se), the wall's exact steady-state U."""
    return 1.0 / (wall.r_si + sum(wall.resistances) + wall.r_se)


@dataclass(frozen=True)
class BoundaryScenario:
    """Boundary driving and sampling description.

    The interior is held constant; the exterior is mean + sinusoid with an
    optional step change (the instability scenario). Noise sigmas describe
    sensor noise added to the sampled outputs.
    """

    duration_hours: float
    step_s: float = 600.0
    t_interior: float = 20.0
    interior_noise_sigma: float = 0.0
    t_exterior_mean: float = 0.0
    exterior_sine_amplitude: float = 0.0
    exterior_sine_period_hours: float = 24.0
    exterior_noise_sigma: float = 0.0
    exterior_step_time_hours: float | None = None
    exterior_step_magnitude: float = 0.0
    flux_noise_sigma: float = 0.0
    initial_state: str = "uniform"  # wall at interior temperature, honest warm-up
                                    # "steady": equilibrium profile for t=0 boundaries

    def __post_init__(self) -> None:
        if self.duration_hours <= 0 or self.step_s <= 0:
            raise DataError("duration and step must be positive")
        if self.exterior_sine_period_hours <= 0:
            raise DataError("sinusoid period must be positive")
        if self.initial_state not in ("uniform", "steady"):
            raise DataError(
                f"initial_state must be 'uniform' or 'steady', got {self.initial_state!r}"
            )
        for sigma in (self.interior_noise_sigma, self.exterior_noise_sigma, self.flux_noise_sigma):
            if sigma < 0:
                raise DataError("noise sigmas must be non-negative")

    @property
    def n_samples(self) -> int:
        return round(self.duration_hours * 3600.0 / self.step_s) + 1

    def interior_at(self, t_s: float) -> float:
        return self.t_interior

    def exterior_at(self, t_s: float) -> float:
        value = self.t_exterior_mean
        if self.exterior_sine_amplitude != 0.0:
            period_s = self.exterior_sine_period_hours * 3600.0
            value += self.exterior_sine_amplitude * math.sin(2.0 * math.pi * t_s / period_s)
        if self.exterior_step_time_hours is not None:
            if t_s >= self.exterior_step_time_hours * 3600.0:
                value += self.exterior_step_magnitude
        return value


@dataclass(frozen=True)
class ReducedChain:
    """The wall's dynamic nodes after exact elimination of massless ones.

    ``branches[i]`` is the series resistance between temperature point i
    and i+1 in the chain [interior air, node₀ … node_{M−1}, exterior air];
    ``caps`` are the M dynamic node capacitances. M may be zero.
    """

    branches: np.ndarray  # (M+1,)
    caps: np.ndarray  # (M,)

    @classmethod
    def from_wall(cls, wall: WallSpec) -> "ReducedChain":
        n_layers = len(wall.resistances)
        node_caps = np.zeros(n_layers + 1)
        for k, c in enumerate(wall.capacitances):
            node_caps[k] += 0.5 * c
            node_caps[k + 1] += 0.5 * c
        all_branches = [wall.r_si, *wall.resistances, wall.r_se]
        branches: list[float] = []
        caps: list[float] = []
        acc = 0.0
        for j, resistance in enumerate(all_branches):
            acc += resistance
            if j <= n_layers:  # arrived at interface node j
                if node_caps[j] > 0.0:
                    branches.append(acc)
                    caps.append(node_caps[j])
                    acc = 0.0
            else:  # arrived at the exterior air point
                branches.append(acc)
        return cls(branches=np.asarray(branches), caps=np.asarray(caps))

    @property
    def n_nodes(self) -> int:
        return len(self.caps)

    @property
    def total_resistance(self) -> float:
        return float(self.branches.sum())

    def min_time_constant(self) -> float | None:
        """Smallest nodal C/(1/R_left + 1/R_right); None for a massless wall."""
        if self.n_nodes == 0:
            return None
        conductance = 1.0 / self.branches[:-1] + 1.0 / self.branches[1:]
        return float(np.min(self.caps / conductance))

    def point_temps(self, temps: np.ndarray, t_i: float, t_e: float) -> np.ndarray:
        return np.concatenate([[t_i], temps, [t_e]])

    def interface_fluxes(self, temps: np.ndarray, t_i: float, t_e: float) -> np.ndarray:
        """Flux through every branch, interior-to-exterior positive."""
        points = self.point_temps(temps, t_i, t_e)
        return (points[:-1] - points[1:]) / self.branches

    def derivative(self, temps: np.ndarray, t_i: float, t_e: float) -> np.ndarray:
        flux = self.interface_fluxes(temps, t_i, t_e)
        return (flux[:-1] - flux[1:]) / self.caps

    def steady_state(self, t_i: float, t_e: float) -> np.ndarray:
        """Node temperatures of the steady profile (linear in resistance)."""
        q = (t_i - t_e) / self.total_resistance
        drops = np.cumsum(self.branches[:-1])
        return t_i - q * drops


def simulate(
    wall: WallSpec,
    scenario: BoundaryScenario,
    seed: int,
    start: datetime = DEFAULT_SERIES_START,
) -> MeasurementSeries:
    """Integrate the wall under the scenario and sample a measurement series.

    Node temperatures start uniform at the interior air temperature, so a
    massive wall shows an honest warm-up transient. Per sample, exactly
    three noise normals are drawn (interior, exterior, flux) regardless of
    the sigmas, which keeps the noise stream of each channel independent
    of the other channels' settings.
    """
    chain = ReducedChain.from_wall(wall)
    n = scenario.n_samples
    if n < 2:
        raise DataError(f"scenario yields {n} samples; need at least 2")
    step = scenario.step_s

    tau = chain.min_time_constant()
    if tau is None:
        n_sub = 1
        dt = step
    else:
        target = SUBSTEP_SAFETY_FACTOR * tau
        n_sub = max(1, math.ceil(step / target))
        if n_sub > MAX_SUBSTEPS_PER_SAMPLE:
            raise UnstableConfiguration(
                f"stable integration needs {n_sub} sub-steps per {step:.0f} s sample "
                f"(limit {MAX_SUBSTEPS_PER_SAMPLE}); smallest time constant is {tau:.3e} s"
            )
        dt = step / n_sub

    if scenario.initial_state == "steady":
        temps = chain.steady_state(scenario.interior_at(0.0), scenario.exterior_at(0.0))
    else:
        temps = np.full(chain.n_nodes, scenario.t_interior)
    rng = Xoshiro256StarStar(seed)
    t_int_out = np.empty(n)
    t_ext_out = np.empty(n)
    flux_out = np.empty(n)

    for k in range(n):
        t_now = k * step
        t_i = scenario.interior_at(t_now)
        t_e = scenario.exterior_at(t_now)
        if chain.n_nodes == 0:
            q = (t_i - t_e) / chain.total_resistance
        else:
            q = (t_i - temps[0]) / chain.branches[0]
        t_int_out[k] = t_i + scenario.interior_noise_sigma * rng.normal()
        t_ext_out[k] = t_e + scenario.exterior_noise_sigma * rng.normal()
        flux_out[k] = q + scenario.flux_noise_sigma * rng.normal()

        if k == n - 1 or chain.n_nodes == 0:
            continue
        for s in range(n_sub):
            t_sub = t_now + s * dt
            temps = temps + dt * chain.derivative(
                temps, scenario.interior_at(t_sub), scenario.exterior_at(t_sub)
            )

    return MeasurementSeries(
        start=start,
        step_s=step,
        t_internal=t_int_out,
        t_external=t_ext_out,
        heat_flux=flux_out,
    )


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise DataError(f"{context}: missing key {key!r}")
    return table[key]


def load_wall(path) -> WallSpec:
    """Read a wall description from a TOML file with a [wall] table."""
    with open(Path(path), "rb") as fh:
        doc = tomllib.load(fh)
    table = doc.get("wall")
    if not isinstance(table, dict):
        raise DataError(f"{path}: expected a [wall] table")
    return WallSpec(
        resistances=tuple(_require(table, "resistances", str(path))),
        capacitances=tuple(_require(table, "capacitances", str(path))),
        r_si=float(table.get("r_si", 0.13)),
        r_se=float(table.get("r_se", 0.04)),
    )


def load_scenario(path) -> BoundaryScenario:
    """Read a boundary scenario from a TOML file with a [scenario] table."""
    with open(Path(path), "rb") as fh:
        doc = tomllib.load(fh)
    table = doc.get("scenario")
    if not isinstance(table, dict):
        raise DataError(f"{path}: expected a [scenario] table")
    interior = table.get("interior", {})
    exterior = table.get("exterior", {})
    flux = table.get("flux", {})
    step_time = exterior.get("step_time_hours")
    return BoundaryScenario(
        duration_hours=float(_require(table, "duration_hours", str(path))),
        step_s=float(table.get("step_seconds", 600.0)),
        t_interior=float(interior.get("temperature", 20.0)),
        interior_noise_sigma=float(interior.get("noise_sigma", 0.0)),
        t_exterior_mean=float(exterior.get("mean", 0.0)),
        exterior_sine_amplitude=float(exterior.get("sine_amplitude", 0.0)),
        exterior_sine_period_hours=float(exterior.get("sine_period_hours", 24.0)),
        exterior_noise_sigma=float(exterior.get("noise_sigma", 0.0)),
        exterior_step_time_hours=None if step_time is None else float(step_time),
        exterior_step_magnitude=float(exterior.get("step_magnitude", 0.0)),
        flux_noise_sigma=float(flux.get("noise_sigma", 0.0)),
        initial_state=str(table.get("initial_state", "uniform")),
    )


def preset_path(kind: str, name: str) -> Path:
    """Path of a shipped preset, e.g. preset_path('walls', 'lightweight')."""
    root = Path(__file__).resolve().parent / "presets" / kind
    candidate = root / f"{name}.toml"
    if not candidate.is_file():
        available = sorted(p.stem for p in root.glob("*.toml"))
        raise DataError(f"no preset {kind}/{name}; available: {available}")
    return candidate
