"""Central-difference verification of the hand-derived gradients.

Perturbs every parameter by ±h, evaluates the full forward + MSE loss,
and compares (J₊ − J₋)/(2h) against the analytic gradient. The relative
error is |analytic − fd| / max(|analytic|, |fd|, 1e-8); at 64-bit
precision and h = 1e-5 a correct implementation stays under 1e-5.
"""

from __future__ import annotations

import numpy as np

from .loss import mse_loss
from .network import NetworkSpec, SequenceNet
from .params import ParamSet

DEFAULT_STEP = 1e-5
_FLOOR = 1e-8


def grad_check(
    spec: NetworkSpec | SequenceNet,
    params: ParamSet,
    inputs,
    targets,
    h: float = DEFAULT_STEP,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    net = spec if isinstance(spec, SequenceNet) else SequenceNet(spec)
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    outputs, caches = net.forward(params, inputs)
    _, d_outputs = mse_loss(outputs, targets)
    analytic = net.backward(params, caches, d_outputs).values

    values = params.values
    worst = 0.0
    for k in range(values.size):
        original = values[k]
        values[k] = original + h
        j_plus, _ = mse_loss(net.outputs(params, inputs), targets)
        values[k] = original - h
        j_minus, _ = mse_loss(net.outputs(params, inputs), targets)
        values[k] = original
        fd = (j_plus - j_minus) / (2.0 * h)
        err = abs(analytic[k] - fd) / max(abs(analytic[k]), abs(fd), _FLOOR)
        worst = max(worst, err)
    return worst
