"""Scalar nonlinearities with exact derivatives.

Derivatives are expressed in terms of the activation *output*, which every
supported kind admits: sigmoid' = y(1−y), tanh' = 1−y², relu' = [y > 0],
identity' = 1. That keeps backward passes free of stored pre-activations.
Exponent arguments are clamped to ±500 before exponentiation; at that
magnitude sigmoid and tanh are saturated to within double precision, so
clamping only prevents overflow.
"""

from __future__ import annotations

import enum

import numpy as np

EXP_CLAMP = 500.0


class ActivationKind(enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"

    @classmethod
    def from_name(cls, name: str) -> "ActivationKind":
        try:
            return cls(name.strip().lower())
        except ValueError as exc:
            known = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown activation {name!r}; expected one of {known}") from exc


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -EXP_CLAMP, EXP_CLAMP)))


def activation(kind: ActivationKind, z):
    """Apply the nonlinearity elementwise; scalars come back as floats."""
    arr = np.asarray(z, dtype=np.float64)
    if kind is ActivationKind.SIGMOID:
        out = sigmoid(arr)
    elif kind is ActivationKind.TANH:
        out = np.tanh(np.clip(arr, -EXP_CLAMP, EXP_CLAMP))
    elif kind is ActivationKind.RELU:
        out = np.maximum(arr, 0.0)
    else:
        out = arr.copy()
    if np.isscalar(z) or getattr(z, "ndim", 0) == 0:
        return float(out)
    return out


def activation_output_derivative(kind: ActivationKind, y: np.ndarray) -> np.ndarray:
    """dφ/dz evaluated from the already-computed output y = φ(z)."""
    y = np.asarray(y, dtype=np.float64)
    if kind is ActivationKind.SIGMOID:
        return y * (1.0 - y)
    if kind is ActivationKind.TANH:
        return 1.0 - y * y
    if kind is ActivationKind.RELU:
        return (y > 0.0).astype(np.float64)
    return np.ones_like(y)
