"""Dense, LSTM and GRU layers with hand-derived reverse-mode gradients.

Layers are geometry-only; their tensors live in a flat parameter vector
and are accessed through per-layer views (see params.py). Recurrent cells
concatenate [h_prev, x] in that order, matching the weight row layout.
Gate nonlinearities are always sigmoid — gating needs (0, 1) — while the
candidate/output activation is configurable (ReLU by default, tanh as the
smooth alternative).

Weight matrices of shape (a, b) are initialised uniformly on
±sqrt(6 / (a + b)); biases start at zero except the LSTM forget-gate bias,
which starts at 1.0 so early training does not flush the cell state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activations import (
    ActivationKind,
    activation,
    activation_output_derivative,
    sigmoid,
)
from .params import DimensionMismatch
from .rng import Xoshiro256StarStar

Shapes = list[tuple[str, tuple[int, ...]]]


@dataclass(frozen=True)
class CellState:
    """Recurrent carry. ``cell`` is empty for layers without one (GRU)."""

    hidden: np.ndarray
    cell: np.ndarray

    @classmethod
    def zeros(cls, width: int, with_cell: bool) -> "CellState":
        return cls(
            hidden=np.zeros(width),
            cell=np.zeros(width if with_cell else 0),
        )


def _glorot_fill(view: dict[str, np.ndarray], name: str, rng: Xoshiro256StarStar) -> None:
    w = view[name]
    limit = math.sqrt(6.0 / (w.shape[0] + w.shape[1]))
    w[...] = rng.uniforms(w.size, -limit, limit).reshape(w.shape)


def _check_input(x: np.ndarray, fan_in: int, who: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != fan_in:
        raise DimensionMismatch(f"{who} expects fan-in {fan_in}, got input shape {x.shape}")
    return x


def _check_state(state: CellState, width: int, with_cell: bool, who: str) -> None:
    if state.hidden.shape != (width,):
        raise DimensionMismatch(f"{who} expects hidden width {width}, got {state.hidden.shape}")
    expected_cell = (width,) if with_cell else (0,)
    if state.cell.shape != expected_cell:
        raise DimensionMismatch(f"{who} expects cell shape {expected_cell}, got {state.cell.shape}")


@dataclass(frozen=True)
class DenseCache:
    x: np.ndarray
    y: np.ndarray


class DenseLayer:
    """y = φ(x @ w + b); accepts a single vector or a (T, fan_in) batch."""

    kind = "dense"
    recurrent = False

    def __init__(self, fan_in: int, width: int, act: ActivationKind) -> None:
        self.fan_in = fan_in
        self.width = width
        self.act = act

    def param_shapes(self) -> Shapes:
        return [("w", (self.fan_in, self.width)), ("b", (self.width,))]

    def initialize(self, view: dict[str, np.ndarray], rng: Xoshiro256StarStar) -> None:
        _glorot_fill(view, "w", rng)
        view["b"][...] = 0.0

    def forward(self, p: dict[str, np.ndarray], x) -> tuple[np.ndarray, DenseCache]:
        x = _check_input(x, self.fan_in, "dense layer")
        z = x @ p["w"] + p["b"]
        y = np.asarray(activation(self.act, z))
        return y, DenseCache(x=x, y=y)

    def backward(
        self,
        p: dict[str, np.ndarray],
        cache: DenseCache,
        dy: np.ndarray,
        grads: dict[str, np.ndarray],
    ) -> np.ndarray:
        dz = dy * activation_output_derivative(self.act, cache.y)
        if cache.x.ndim == 1:
            grads["w"] += np.outer(cache.x, dz)
            grads["b"] += dz
        else:
            grads["w"] += cache.x.T @ dz
            grads["b"] += dz.sum(axis=0)
        return dz @ p["w"].T


@dataclass(frozen=True)
class LstmCache:
    hcat: np.ndarray
    f: np.ndarray
    i: np.ndarray
    ctilde: np.ndarray
    o: np.ndarray
    c_prev: np.ndarray
    c: np.ndarray
    a: np.ndarray  # act(c)


class LstmLayer:
    """Forget / store / candidate / output gates over [h_prev, x].

    f = σ(W_f·[h,x]+b_f); i = σ(W_i·[h,x]+b_i); c̃ = act(W_c·[h,x]+b_c);
    c' = f⊙c + i⊙c̃; o = σ(W_o·[h,x]+b_o); h' = o⊙act(c').
    """

    kind = "lstm"
    recurrent = True
    has_cell = True
    _gates = ("f", "i", "c", "o")

    def __init__(self, fan_in: int, width: int, act: ActivationKind) -> None:
        self.fan_in = fan_in
        self.width = width
        self.act = act

    def param_shapes(self) -> Shapes:
        rows = self.width + self.fan_in
        shapes: Shapes = [(f"w_{g}", (rows, self.width)) for g in self._gates]
        shapes += [(f"b_{g}", (self.width,)) for g in self._gates]
        return shapes

    def initialize(self, view: dict[str, np.ndarray], rng: Xoshiro256StarStar) -> None:
        for g in self._gates:
            _glorot_fill(view, f"w_{g}", rng)
        for g in self._gates:
            view[f"b_{g}"][...] = 1.0 if g == "f" else 0.0

    def init_state(self) -> CellState:
        return CellState.zeros(self.width, with_cell=True)

    def step(
        self, p: dict[str, np.ndarray], x, prev: CellState
    ) -> tuple[CellState, LstmCache]:
        x = _check_input(x, self.fan_in, "lstm step")
        _check_state(prev, self.width, True, "lstm step")
        hcat = np.concatenate([prev.hidden, x])
        f = sigmoid(hcat @ p["w_f"] + p["b_f"])
        i = sigmoid(hcat @ p["w_i"] + p["b_i"])
        ctilde = np.asarray(activation(self.act, hcat @ p["w_c"] + p["b_c"]))
        o = sigmoid(hcat @ p["w_o"] + p["b_o"])
        c = f * prev.cell + i * ctilde
        a = np.asarray(activation(self.act, c))
        h = o * a
        cache = LstmCache(hcat=hcat, f=f, i=i, ctilde=ctilde, o=o, c_prev=prev.cell, c=c, a=a)
        return CellState(hidden=h, cell=c), cache

    def backward_step(
        self,
        p: dict[str, np.ndarray],
        cache: LstmCache,
        dh: np.ndarray,
        dc_in: np.ndarray,
        grads: dict[str, np.ndarray],
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (dx, dh_prev, dc_prev) and accumulates parameter grads."""
        n = self.width
        dzo = dh * cache.a * cache.o * (1.0 - cache.o)
        dc = dc_in + dh * cache.o * activation_output_derivative(self.act, cache.a)
        dzf = dc * cache.c_prev * cache.f * (1.0 - cache.f)
        dzi = dc * cache.ctilde * cache.i * (1.0 - cache.i)
        dzc = dc * cache.i * activation_output_derivative(self.act, cache.ctilde)
        dc_prev = dc * cache.f
        dhcat = np.zeros_like(cache.hcat)
        for g, dz in (("f", dzf), ("i", dzi), ("c", dzc), ("o", dzo)):
            grads[f"w_{g}"] += np.outer(cache.hcat, dz)
            grads[f"b_{g}"] += dz
            dhcat += p[f"w_{g}"] @ dz
        return dhcat[n:], dhcat[:n], dc_prev


@dataclass(frozen=True)
class GruCache:
    hcat: np.ndarray
    hcat_c: np.ndarray
    r: np.ndarray
    z: np.ndarray
    htilde: np.ndarray
    h_prev: np.ndarray


class GruLayer:
    """Reset / update gates plus candidate activation over [h_prev, x].

    r = σ(W_r·[h,x]+b_r); z = σ(W_z·[h,x]+b_z);
    h̃ = act(W_h·[r⊙h, x]+b_h); h' = (1−z)⊙h + z⊙h̃.
    """

    kind = "gru"
    recurrent = True
    has_cell = False

    def __init__(self, fan_in: int, width: int, act: ActivationKind) -> None:
        self.fan_in = fan_in
        self.width = width
        self.act = act

    def param_shapes(self) -> Shapes:
        rows = self.width + self.fan_in
        return [
            ("w_r", (rows, self.width)),
            ("w_z", (rows, self.width)),
            ("w_h", (rows, self.width)),
            ("b_r", (self.width,)),
            ("b_z", (self.width,)),
            ("b_h", (self.width,)),
        ]

    def initialize(self, view: dict[str, np.ndarray], rng: Xoshiro256StarStar) -> None:
        for name in ("w_r", "w_z", "w_h"):
            _glorot_fill(view, name, rng)
        for name in ("b_r", "b_z", "b_h"):
            view[name][...] = 0.0

    def init_state(self) -> CellState:
        return CellState.zeros(self.width, with_cell=False)

    def step(
        self, p: dict[str, np.ndarray], x, prev: CellState
    ) -> tuple[CellState, GruCache]:
        x = _check_input(x, self.fan_in, "gru step")
        _check_state(prev, self.width, False, "gru step")
        h_prev = prev.hidden
        hcat = np.concatenate([h_prev, x])
        r = sigmoid(hcat @ p["w_r"] + p["b_r"])
        z = sigmoid(hcat @ p["w_z"] + p["b_z"])
        hcat_c = np.concatenate([r * h_prev, x])
        htilde = np.asarray(activation(self.act, hcat_c @ p["w_h"] + p["b_h"]))
        h = (1.0 - z) * h_prev + z * htilde
        cache = GruCache(hcat=hcat, hcat_c=hcat_c, r=r, z=z, htilde=htilde, h_prev=h_prev)
        return CellState(hidden=h, cell=np.zeros(0)), cache

    def backward_step(
        self,
        p: dict[str, np.ndarray],
        cache: GruCache,
        dh: np.ndarray,
        grads: dict[str, np.ndarray],
    ) -> tuple[np.ndarray, np.ndarray]:
        """Returns (dx, dh_prev) and accumulates parameter grads."""
        n = self.width
        dzz = dh * (cache.htilde - cache.h_prev) * cache.z * (1.0 - cache.z)
        dzh = dh * cache.z * activation_output_derivative(self.act, cache.htilde)
        dh_prev = dh * (1.0 - cache.z)

        grads["w_h"] += np.outer(cache.hcat_c, dzh)
        grads["b_h"] += dzh
        dhcat_c = p["w_h"] @ dzh
        d_rh = dhcat_c[:n]
        dx = dhcat_c[n:].copy()
        dzr = d_rh * cache.h_prev * cache.r * (1.0 - cache.r)
        dh_prev = dh_prev + d_rh * cache.r

        for name, dz in (("r", dzr), ("z", dzz)):
            grads[f"w_{name}"] += np.outer(cache.hcat, dz)
            grads[f"b_{name}"] += dz
            dhcat = p[f"w_{name}"] @ dz
            dh_prev = dh_prev + dhcat[:n]
            dx += dhcat[n:]
        return dx, dh_prev


def dense_forward(layer: DenseLayer, p: dict[str, np.ndarray], x):
    """Functional wrapper over :meth:`DenseLayer.forward`."""
    return layer.forward(p, x)


def lstm_step(layer: LstmLayer, p: dict[str, np.ndarray], x, prev: CellState):
    """Functional wrapper over :meth:`LstmLayer.step`."""
    return layer.step(p, x, prev)


def gru_step(layer: GruLayer, p: dict[str, np.ndarray], x, prev: CellState):
    """Functional wrapper over :meth:`GruLayer.step`."""
    return layer.step(p, x, prev)
