"""
Optimizers updating named parameter arrays in place
"""
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from grace.config import OptimizerRule
from grace.errors import InputError, ParameterError

# Configure logging
logger = logging.getLogger(__name__)

EPSILON = 1e-8
BETA1 = 0.9
BETA2 = 0.999


@dataclass
class OptimizerState:
    """
    Per-parameter accumulators of an optimizer.

    AccumulatedGradient keeps the running sum of squared gradients under
    "sq"; AdaptiveMoment keeps first/second moments under "m" and "v".
    """

    rule: OptimizerRule
    rho: float
    accumulators: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    t: int = 0

    def __post_init__(self) -> None:
        self.rule = OptimizerRule(self.rule)
        if self.rho <= 0:
            raise ParameterError(f"Learning rate must be positive, got {self.rho}")


def optimizer_step(
    state: OptimizerState,
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray]
) -> Dict[str, np.ndarray]:
    """
    Apply one update to every parameter that has a gradient

    Args:
        state: Optimizer state, advanced by one step
        params: Named parameter arrays, modified in place
        grads: Gradients keyed like params

    Returns:
        Dict: The updated params
    """
    state.t += 1
    for name, grad in grads.items():
        if name not in params:
            raise InputError(f"Gradient for unknown parameter {name}")
        param = params[name]
        if grad.shape != param.shape:
            raise InputError(f"Gradient shape {grad.shape} does not match parameter {name} {param.shape}")
        slots = state.accumulators.setdefault(name, {})
        if state.rule == OptimizerRule.ACCUMULATED:
            sq = slots.setdefault("sq", np.zeros_like(param))
            sq += grad * grad
            param -= state.rho * grad / np.sqrt(sq + EPSILON)
        else:
            m = slots.setdefault("m", np.zeros_like(param))
            v = slots.setdefault("v", np.zeros_like(param))
            m *= BETA1
            m += (1.0 - BETA1) * grad
            v *= BETA2
            v += (1.0 - BETA2) * grad * grad
            m_hat = m / (1.0 - BETA1 ** state.t)
            v_hat = v / (1.0 - BETA2 ** state.t)
            param -= state.rho * m_hat / (np.sqrt(v_hat) + EPSILON)
    return params
