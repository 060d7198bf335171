"""Flat parameter storage with a deterministic layout table.

All weights and biases of a network live in one contiguous float64 vector.
A layout table maps (layer index, tensor name) to (offset, shape); offsets
are assigned in declaration order, so the layout is a pure function of the
architecture. Gradients share the same layout, which makes optimizer
updates plain vector arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import HfmError


class LayoutMismatch(HfmError):
    """Vectors with incompatible layouts were combined."""


class DimensionMismatch(HfmError):
    """An input does not match the layer geometry."""


@dataclass(frozen=True)
class TensorSlot:
    layer: int
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return math.prod(self.shape)


@dataclass(frozen=True)
class ParamLayout:
    """Ordered, disjoint, exactly-covering slot table over a flat vector."""

    slots: tuple[TensorSlot, ...]
    size: int = field(init=False)

    def __post_init__(self) -> None:
        offset = 0
        for slot in self.slots:
            if slot.offset != offset:
                raise LayoutMismatch(
                    f"slot {slot.layer}/{slot.name} at offset {slot.offset}, expected {offset}"
                )
            offset += slot.size
        object.__setattr__(self, "size", offset)

    @classmethod
    def build(cls, shapes_per_layer: list[list[tuple[str, tuple[int, ...]]]]) -> "ParamLayout":
        slots = []
        offset = 0
        for layer_idx, shapes in enumerate(shapes_per_layer):
            for name, shape in shapes:
                slot = TensorSlot(layer=layer_idx, name=name, offset=offset, shape=shape)
                slots.append(slot)
                offset += slot.size
        return cls(slots=tuple(slots))

    def layer_slots(self, layer: int) -> list[TensorSlot]:
        return [s for s in self.slots if s.layer == layer]

    def view(self, values: np.ndarray, layer: int) -> dict[str, np.ndarray]:
        """Per-layer dict of reshaped views into the flat vector."""
        return {
            s.name: values[s.offset : s.offset + s.size].reshape(s.shape)
            for s in self.layer_slots(layer)
        }


@dataclass
class FlatVector:
    """A float64 vector congruent with a :class:`ParamLayout`."""

    layout: ParamLayout
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.layout.size:
            raise LayoutMismatch(
                f"vector has {self.values.size} values, layout expects {self.layout.size}"
            )

    def layer(self, idx: int) -> dict[str, np.ndarray]:
        return self.layout.view(self.values, idx)

    def copy(self):
        return type(self)(layout=self.layout, values=self.values.copy())


class ParamSet(FlatVector):
    """All weights and biases of a network, flattened."""


class Gradient(FlatVector):
    """Loss gradient with the same layout as its ParamSet."""


def zeros_gradient(params: ParamSet) -> Gradient:
    return Gradient(layout=params.layout, values=np.zeros(params.layout.size))


def check_congruent(params: ParamSet, grad: Gradient) -> None:
    if params.layout.slots != grad.layout.slots:
        raise LayoutMismatch("parameter and gradient layouts differ")
