"""Full-batch parameter update rules: plain SGD and Adam.

Optimizers own their state (Adam's moment estimates) and update the
parameter vector in place between passes. Adam follows the standard
first/second-moment recursion with bias correction:

    m ← β₁ m + (1−β₁) g        v ← β₂ v + (1−β₂) g²
    ŵ ← w − η · m̂ / (√v̂ + ε)   with m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ)
"""

from __future__ import annotations

import numpy as np

from ..errors import HfmError
from .params import Gradient, ParamSet, check_congruent


class SgdOptimizer:
    """w ← w − η·g."""

    name = "sgd"

    def __init__(self, learning_rate: float = 0.01) -> None:
        self.learning_rate = learning_rate

    def step(self, params: ParamSet, grad: Gradient) -> None:
        check_congruent(params, grad)
        params.values -= self.learning_rate * grad.values


class AdamOptimizer:
    name = "adam"

    def __init__(
        self,
        learning_rate: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: np.ndarray | None = None
        self._v: np.ndarray | None = None

    def step(self, params: ParamSet, grad: Gradient) -> None:
        check_congruent(params, grad)
        if self._m is None:
            self._m = np.zeros_like(params.values)
            self._v = np.zeros_like(params.values)
        self.t += 1
        g = grad.values
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * g
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * g * g
        m_hat = self._m / (1.0 - self.beta1**self.t)
        v_hat = self._v / (1.0 - self.beta2**self.t)
        params.values -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


Optimizer = SgdOptimizer | AdamOptimizer


def make_optimizer(
    name: str,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Optimizer:
    kind = name.strip().lower()
    if kind == "sgd":
        return SgdOptimizer(learning_rate=learning_rate)
    if kind == "adam":
        return AdamOptimizer(learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps)
    raise HfmError(f"unknown optimizer {name!r}; expected 'sgd' or 'adam'")


def optimizer_step(optimizer: Optimizer, params: ParamSet, grad: Gradient) -> None:
    """Functional spelling of ``optimizer.step`` (updates params in place)."""
    optimizer.step(params, grad)
