"""
Central finite-difference gradient checking
"""
import logging
from typing import Callable, Dict, Optional

import numpy as np

from grace.errors import InputError, NumericalError

# Configure logging
logger = logging.getLogger(__name__)

MAX_COORDINATES = 200
# Denominator floor of the relative error; keeps round-off in tiny gradients from dominating
RELATIVE_FLOOR = 1e-4


def grad_check(
    loss_fn: Callable[[Dict[str, np.ndarray]], float],
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    epsilon: float = 1e-5,
    max_coordinates: int = MAX_COORDINATES,
    rng: Optional[np.random.Generator] = None
) -> float:
    """
    Compare analytic gradients with central differences

    Args:
        loss_fn: Evaluates the scalar loss at the current values of params
        params: Named parameter arrays, perturbed in place and restored
        grads: Analytic gradients keyed like params
        epsilon: Finite-difference step
        max_coordinates: Coordinates checked at most (random subsample above)
        rng: Generator for the subsample

    Returns:
        float: Maximum relative error |a - f| / max(|a|, |f|, floor)
    """
    coordinates = []
    for name, param in params.items():
        if name not in grads or grads[name].shape != param.shape:
            raise InputError(f"Missing or misshapen gradient for {name}")
        coordinates.extend((name, i) for i in range(param.size))
    if len(coordinates) > max_coordinates:
        rng = rng if rng is not None else np.random.default_rng(0)
        picked = rng.choice(len(coordinates), size=max_coordinates, replace=False)
        coordinates = [coordinates[i] for i in sorted(picked)]

    worst = 0.0
    for name, index in coordinates:
        param = params[name]
        position = np.unravel_index(index, param.shape)
        original = param[position]
        param[position] = original + epsilon
        plus = loss_fn(params)
        param[position] = original - epsilon
        minus = loss_fn(params)
        param[position] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NumericalError(f"Non-finite loss while perturbing {name}[{index}]")
        numeric = (plus - minus) / (2.0 * epsilon)
        analytic = grads[name].reshape(-1)[index]
        error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), RELATIVE_FLOOR)
        if error > worst:
            worst = error
            logger.debug(f"{name}[{index}]: analytic={analytic:.6e} numeric={numeric:.6e}")
    return float(worst)
