"""Mean-squared-error loss over a predicted sequence."""

from __future__ import annotations

import numpy as np

from .params import DimensionMismatch


class LengthMismatch(DimensionMismatch):
    """Predicted and target sequences differ in length or are empty."""


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """J = (1/n) Σ (y − f)²; returns (J, dJ/df) with dJ/df = 2(f − y)/n."""
    f = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(target, dtype=np.float64).ravel()
    if f.shape != y.shape:
        raise LengthMismatch(f"pred has length {f.size}, target {y.size}")
    if f.size == 0:
        raise LengthMismatch("loss needs at least one element")
    diff = f - y
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / f.size) * diff
