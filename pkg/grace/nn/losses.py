"""
Reconstruction losses returning the scalar loss and its gradient
"""
from typing import Tuple

import numpy as np

from grace.errors import InputError
from grace.nn.activations import sigmoid


def _check_shapes(target: np.ndarray, output: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    target = np.asarray(target, dtype=np.float64)
    output = np.asarray(output, dtype=np.float64)
    if target.shape != output.shape or target.ndim != 2:
        raise InputError(f"Loss shapes differ: target {target.shape}, output {output.shape}")
    return target, output


def bce_loss(target: np.ndarray, logits: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Sigmoid cross entropy on logits, summed over features and averaged over nodes

    Args:
        target: n x kappa matrix of 0/1 values
        logits: n x kappa decoder outputs

    Returns:
        Tuple[float, np.ndarray]: Loss and its gradient with respect to logits
    """
    target, logits = _check_shapes(target, logits)
    if not np.all((target == 0.0) | (target == 1.0)):
        raise InputError("Cross entropy targets must be binary")
    n = max(target.shape[0], 1)
    # max(z, 0) - z t + log(1 + exp(-|z|))
    per_entry = np.maximum(logits, 0.0) - logits * target + np.log1p(np.exp(-np.abs(logits)))
    loss = float(per_entry.sum() / n)
    grad = (sigmoid(logits) - target) / n
    return loss, grad


def mse_loss(target: np.ndarray, output: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Squared error, averaged over features and over nodes

    Args:
        target: n x kappa continuous contents
        output: n x kappa reconstruction

    Returns:
        Tuple[float, np.ndarray]: Loss and its gradient with respect to output
    """
    target, output = _check_shapes(target, output)
    count = max(target.size, 1)
    diff = output - target
    return float(np.sum(diff * diff) / count), 2.0 * diff / count
