"""
Fully connected layers with dropout on their inputs and hand-derived backward passes
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from grace.errors import InputError, NumericalError, ParameterError
from grace.nn.activations import Activation, apply, derivative

# Configure logging
logger = logging.getLogger(__name__)


def dropout_mask(
    shape: Tuple[int, ...],
    rate: float,
    rng: Optional[np.random.Generator] = None,
    training: bool = True
) -> np.ndarray:
    """
    Inverted dropout mask

    Args:
        shape: Shape of the masked tensor
        rate: Probability of dropping an entry, in [0, 1)
        rng: Random generator (required when training with rate > 0)
        training: All-ones mask when False

    Returns:
        np.ndarray: Entries 0 or 1/(1-rate)
    """
    if not (0.0 <= rate < 1.0):
        raise ParameterError(f"Dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return np.ones(shape, dtype=np.float64)
    if rng is None:
        raise ParameterError("A random generator is required for training-mode dropout")
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


@dataclass
class LayerGrads:
    weight: np.ndarray
    bias: np.ndarray
    inputs: np.ndarray


class DenseLayer:
    """
    y = act(W (x * mask) + b) applied row-wise to a batch.

    weight has shape (out, in); forward caches the masked input and the
    pre-activation so backward can return exact gradients of that pass.
    """

    def __init__(self, weight: np.ndarray, bias: np.ndarray, activation: Activation = Activation.ELU):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64).reshape(-1)
        self.activation = Activation(activation)
        if self.weight.ndim != 2 or self.bias.shape[0] != self.weight.shape[0]:
            raise InputError(f"Incompatible layer shapes {self.weight.shape} and {self.bias.shape}")
        self._cache: Optional[Dict[str, np.ndarray]] = None

    @classmethod
    def initialize(
        cls,
        fan_in: int,
        fan_out: int,
        activation: Activation,
        rng: np.random.Generator
    ) -> "DenseLayer":
        """Uniform initialization in +-sqrt(6 / (fan_in + fan_out)) with zero bias"""
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        return cls(weight, np.zeros(fan_out), activation)

    @property
    def fan_in(self) -> int:
        return self.weight.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[0]

    def forward(self, X: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.fan_in:
            raise InputError(f"Layer expects {self.fan_in} input columns, got shape {X.shape}")
        if mask is None:
            mask = np.ones_like(X)
        elif mask.shape != X.shape:
            raise InputError(f"Dropout mask shape {mask.shape} does not match input {X.shape}")
        masked = X * mask
        pre = masked @ self.weight.T + self.bias
        self._cache = {"masked": masked, "mask": mask, "pre": pre}
        return apply(self.activation, pre)

    @property
    def cache(self) -> Optional[Dict[str, np.ndarray]]:
        """State of the latest forward pass"""
        return self._cache

    def backward(self, upstream: np.ndarray, cache: Optional[Dict[str, np.ndarray]] = None) -> LayerGrads:
        """Gradients of the latest forward pass, or of an earlier one whose cache was kept"""
        cache = self._cache if cache is None else cache
        if cache is None:
            raise InputError("backward called before forward")
        pre = cache["pre"]
        if upstream.shape != pre.shape:
            raise InputError(f"Upstream gradient shape {upstream.shape} does not match output {pre.shape}")
        d_pre = upstream * derivative(self.activation, pre)
        return LayerGrads(
            weight=d_pre.T @ cache["masked"],
            bias=d_pre.sum(axis=0),
            inputs=(d_pre @ self.weight) * cache["mask"],
        )

    def check_finite(self, name: str) -> None:
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise NumericalError(f"Non-finite parameters in layer {name}")
