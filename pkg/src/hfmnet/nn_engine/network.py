"""Layer-stack assembly and full-sequence forward/backward passes.

A network is an ordered stack of layer descriptors applied per timestep;
recurrent layers carry their state across the whole sequence (full BPTT,
no truncation — sequences here are a few hundred steps at most). Dense
layers are stateless, so they run batched over all timesteps at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind
from .layers import CellState, DenseLayer, GruLayer, LstmLayer
from .params import DimensionMismatch, Gradient, ParamLayout, ParamSet, zeros_gradient
from .rng import Xoshiro256StarStar

LAYER_KINDS = ("dense", "lstm", "gru")


@dataclass(frozen=True)
class LayerSpec:
    """Declarative layer description: kind, width, activation.

    For recurrent kinds the activation is the candidate/output activation;
    gates are always sigmoid.
    """

    kind: str
    width: int
    activation: ActivationKind

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}; expected one of {LAYER_KINDS}")
        if self.width < 1:
            raise ValueError(f"layer width must be >= 1, got {self.width}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description: input width plus an ordered layer stack.

    The last layer is the single output layer: dense, width 1, identity
    activation, so the network maps a (T, input_width) sequence to T
    scalar predictions.
    """

    name: str
    layers: tuple[LayerSpec, ...]
    input_width: int = 2

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        last = self.layers[-1]
        if last.kind != "dense" or last.width != 1 or last.activation is not ActivationKind.IDENTITY:
            raise ValueError(
                "the final layer must be Dense(1, identity); got "
                f"{last.kind}({last.width}, {last.activation.value})"
            )
        if self.input_width < 1:
            raise ValueError(f"input width must be >= 1, got {self.input_width}")

    @property
    def parameter_count(self) -> int:
        return SequenceNet(self).layout.size


_LAYER_CLASSES = {"dense": DenseLayer, "lstm": LstmLayer, "gru": GruLayer}


class SequenceNet:
    """Executable form of a :class:`NetworkSpec` over a flat ParamSet."""

    def __init__(self, spec: NetworkSpec) -> None:
        self.spec = spec
        self.layers = []
        fan_in = spec.input_width
        for ls in spec.layers:
            layer = _LAYER_CLASSES[ls.kind](fan_in=fan_in, width=ls.width, act=ls.activation)
            self.layers.append(layer)
            fan_in = ls.width
        self.layout = ParamLayout.build([layer.param_shapes() for layer in self.layers])

    def init_params(self, seed: int) -> ParamSet:
        """Deterministic initialisation; identical seeds give identical nets."""
        params = ParamSet(layout=self.layout, values=np.zeros(self.layout.size))
        rng = Xoshiro256StarStar(seed)
        for idx, layer in enumerate(self.layers):
            layer.initialize(params.layer(idx), rng)
        return params

    def _check_inputs(self, inputs) -> np.ndarray:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_width:
            raise DimensionMismatch(
                f"inputs must have shape (T, {self.spec.input_width}), got {x.shape}"
            )
        return x

    def forward(self, params: ParamSet, inputs) -> tuple[np.ndarray, list]:
        """Run the whole sequence; returns (outputs (T,), caches for backward)."""
        acts = self._check_inputs(inputs)
        n_steps = acts.shape[0]
        caches: list = []
        for idx, layer in enumerate(self.layers):
            p = params.layer(idx)
            if layer.recurrent:
                state = layer.init_state()
                step_caches = []
                hidden = np.empty((n_steps, layer.width))
                for t in range(n_steps):
                    state, cache = layer.step(p, acts[t], state)
                    step_caches.append(cache)
                    hidden[t] = state.hidden
                caches.append(step_caches)
                acts = hidden
            else:
                acts, cache = layer.forward(p, acts)
                caches.append(cache)
        return acts[:, 0], caches

    def outputs(self, params: ParamSet, inputs) -> np.ndarray:
        """Forward pass without keeping anything for backward."""
        return self.forward(params, inputs)[0]

    def backward(self, params: ParamSet, caches: list, d_outputs) -> Gradient:
        """Reverse-mode pass; returns the full parameter gradient."""
        grad = zeros_gradient(params)
        d_acts = np.asarray(d_outputs, dtype=np.float64).reshape(-1, 1)
        n_steps = d_acts.shape[0]
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            p = params.layer(idx)
            g = grad.layer(idx)
            if layer.recurrent:
                step_caches = caches[idx]
                d_inputs = np.empty((n_steps, layer.fan_in))
                dh_carry = np.zeros(layer.width)
                if layer.has_cell:
                    dc_carry = np.zeros(layer.width)
                    for t in range(n_steps - 1, -1, -1):
                        dh = d_acts[t] + dh_carry
                        dx, dh_carry, dc_carry = layer.backward_step(
                            p, step_caches[t], dh, dc_carry, g
                        )
                        d_inputs[t] = dx
                else:
                    for t in range(n_steps - 1, -1, -1):
                        dh = d_acts[t] + dh_carry
                        dx, dh_carry = layer.backward_step(p, step_caches[t], dh, g)
                        d_inputs[t] = dx
                d_acts = d_inputs
            else:
                d_acts = layer.backward(p, caches[idx], d_acts, g)
        return grad
