"""
Elementwise activations and their derivatives
"""
from enum import Enum

import numpy as np


class Activation(str, Enum):
    ELU = "elu"
    LINEAR = "linear"
    SIGMOID = "sigmoid"


def elu(x):
    """x for x > 0, exp(x) - 1 otherwise"""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    """1 for x > 0, exp(x) otherwise"""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def sigmoid(x):
    """Logistic function evaluated without overflow"""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def apply(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.ELU:
        return elu(z)
    if kind == Activation.SIGMOID:
        return sigmoid(z)
    return z


def derivative(kind: Activation, z: np.ndarray) -> np.ndarray:
    """Derivative of the activation at the pre-activation z"""
    if kind == Activation.ELU:
        return elu_grad(z)
    if kind == Activation.SIGMOID:
        s = sigmoid(z)
        return s * (1.0 - s)
    return np.ones_like(z)
