"""Self-contained neural sequence core.

Flat parameter vectors with a deterministic layout, dense/LSTM/GRU layers
with hand-derived reverse-mode gradients, MSE loss, SGD/Adam updates, a
finite-difference gradient checker, and a platform-independent seedable
generator. No autodiff framework underneath — every gradient is explicit
and is verified against central differences in the test suite.
"""

from .activations import ActivationKind, activation, activation_output_derivative
from .checkpoint import load_params, params_from_payload, params_to_payload, save_params
from .gradcheck import grad_check
from .layers import (
    CellState,
    DenseLayer,
    GruLayer,
    LstmLayer,
    dense_forward,
    gru_step,
    lstm_step,
)
from .loss import LengthMismatch, mse_loss
from .network import LayerSpec, NetworkSpec, SequenceNet
from .optim import AdamOptimizer, SgdOptimizer, make_optimizer, optimizer_step
from .params import (
    DimensionMismatch,
    FlatVector,
    Gradient,
    LayoutMismatch,
    ParamLayout,
    ParamSet,
    TensorSlot,
    zeros_gradient,
)
from .rng import Xoshiro256StarStar, derive_seed

__all__ = [
    "ActivationKind",
    "AdamOptimizer",
    "CellState",
    "DenseLayer",
    "DimensionMismatch",
    "FlatVector",
    "Gradient",
    "GruLayer",
    "LayerSpec",
    "LayoutMismatch",
    "LengthMismatch",
    "LstmLayer",
    "NetworkSpec",
    "ParamLayout",
    "ParamSet",
    "SequenceNet",
    "SgdOptimizer",
    "TensorSlot",
    "Xoshiro256StarStar",
    "activation",
    "activation_output_derivative",
    "dense_forward",
    "derive_seed",
    "grad_check",
    "gru_step",
    "load_params",
    "lstm_step",
    "make_optimizer",
    "mse_loss",
    "optimizer_step",
    "params_from_payload",
    "params_to_payload",
    "save_params",
    "zeros_gradient",
]
