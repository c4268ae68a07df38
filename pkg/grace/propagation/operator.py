"""
Stationary influence propagation and its approximations
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from grace.errors import InputError, NumericalError, ParameterError
from grace.graph.adjacency import spmm

# Configure logging
logger = logging.getLogger(__name__)

DEFAULT_NEUMANN_ORDER = 50
DEFAULT_DENSE_NODE_LIMIT = 20000


class PropagationVariant(str, Enum):
    EXACT_STATIONARY = "exact"
    NEUMANN_TRUNCATED = "neumann"
    PLAIN_POWER = "power"


@dataclass(frozen=True)
class PropagationOperator:
    """
    Influence propagation operator.

    ExactStationary holds R = (1-alpha)(I - alpha T)^-1, NeumannTruncated holds
    R_B = (1-alpha) sum_{b<=B} alpha^b T^b, PlainPower applies T^b. R is None
    when the operator is applied lazily through sparse products. beta is fixed
    to 1, so gamma equals alpha.
    """

    variant: PropagationVariant
    alpha: float
    T: sp.csr_matrix
    T_adjoint: sp.csr_matrix
    R: Optional[np.ndarray] = None
    order: Optional[int] = None
    steps: Optional[int] = None
    error_bound: float = 0.0
    beta: float = 1.0

    @property
    def gamma(self) -> float:
        return self.alpha / self.beta

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def materialized(self) -> bool:
        return self.R is not None


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha < 1.0):
        raise ParameterError(f"Damping alpha must lie in [0, 1), got {alpha}")


def _as_csr(T: sp.spmatrix) -> sp.csr_matrix:
    T = sp.csr_matrix(T, dtype=np.float64)
    if T.shape[0] != T.shape[1]:
        raise InputError(f"Transition matrix must be square, got {T.shape}")
    return T


def _adjoint(T: sp.csr_matrix) -> sp.csr_matrix:
    T_adjoint = sp.csr_matrix(T.transpose())
    T_adjoint.sort_indices()
    return T_adjoint


def exact_stationary(T: sp.spmatrix, alpha: float) -> PropagationOperator:
    """
    Stationary propagation matrix through an LU factorization of (I - alpha T)

    Args:
        T: Row-stochastic transition matrix
        alpha: Damping coefficient in [0, 1)

    Returns:
        PropagationOperator: Dense operator whose rows sum to 1
    """
    _check_alpha(alpha)
    T = _as_csr(T)
    n = T.shape[0]
    system = np.eye(n) - alpha * T.toarray()
    lu, piv = scipy.linalg.lu_factor(system, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if n and pivots.min() <= np.finfo(np.float64).eps * max(1.0, pivots.max()):
        raise NumericalError(f"Propagation system is singular (alpha={alpha})")
    # One solve per basis column
    R = (1.0 - alpha) * scipy.linalg.lu_solve((lu, piv), np.eye(n))
    if not np.all(np.isfinite(R)):
        raise NumericalError("Non-finite entries in the stationary propagation matrix")
    logger.info(f"Computed exact stationary operator for {n} nodes, alpha={alpha}")
    return PropagationOperator(
        variant=PropagationVariant.EXACT_STATIONARY,
        alpha=alpha,
        T=T,
        T_adjoint=_adjoint(T),
        R=R,
    )


def neumann_truncated(
    T: sp.spmatrix,
    alpha: float,
    order: int = DEFAULT_NEUMANN_ORDER,
    materialize: bool = True
) -> PropagationOperator:
    """
    Truncated geometric series approximation of the stationary operator

    Args:
        T: Row-stochastic transition matrix
        alpha: Damping coefficient in [0, 1)
        order: Highest power B kept in the series
        materialize: Build the dense R_B; otherwise apply the series lazily

    Returns:
        PropagationOperator: Operator with error_bound = alpha^(B+1)
    """
    _check_alpha(alpha)
    if order < 0:
        raise ParameterError(f"Neumann order must be nonnegative, got {order}")
    T = _as_csr(T)
    n = T.shape[0]
    R = None
    if materialize:
        term = np.eye(n)
        total = term.copy()
        for _ in range(order):
            term = alpha * spmm(T, term)
            total += term
        R = (1.0 - alpha) * total
    bound = alpha ** (order + 1)
    logger.info(f"Built Neumann operator of order {order} (bound {bound:.3e}, dense={materialize})")
    return PropagationOperator(
        variant=PropagationVariant.NEUMANN_TRUNCATED,
        alpha=alpha,
        T=T,
        T_adjoint=_adjoint(T),
        R=R,
        order=order,
        error_bound=bound,
    )


def plain_power(T: sp.spmatrix, steps: int) -> PropagationOperator:
    """Operator applying T^b without damping (never materialized)"""
    if steps < 0:
        raise ParameterError(f"Power steps must be nonnegative, got {steps}")
    T = _as_csr(T)
    return PropagationOperator(
        variant=PropagationVariant.PLAIN_POWER,
        alpha=0.0,
        T=T,
        T_adjoint=_adjoint(T),
        steps=steps,
    )


def plain_power_propagate(T: sp.spmatrix, X: np.ndarray, steps: int) -> np.ndarray:
    """
    Apply T^b to an embedding with b successive sparse products

    Args:
        T: Transition matrix
        X: n x d embedding
        steps: Number of propagation steps b

    Returns:
        np.ndarray: T^b X
    """
    if steps < 0:
        raise ParameterError(f"Power steps must be nonnegative, got {steps}")
    out = np.array(X, dtype=np.float64, copy=True)
    for _ in range(steps):
        out = spmm(T, out)
    return out


def _neumann_apply(T: sp.csr_matrix, X: np.ndarray, alpha: float, order: int) -> np.ndarray:
    # Horner form of sum_{b<=B} alpha^b T^b X
    out = X.copy()
    for _ in range(order):
        out = X + alpha * spmm(T, out)
    return (1.0 - alpha) * out


def _check_rows(op: PropagationOperator, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim not in (1, 2) or X.shape[0] != op.n:
        raise InputError(f"Operator of size {op.n} cannot act on shape {X.shape}")
    return X


def propagate(op: PropagationOperator, X: np.ndarray) -> np.ndarray:
    """
    Propagated embedding X_tilde = R X (or T^b X for plain powers)

    Args:
        op: Propagation operator
        X: n x d embedding

    Returns:
        np.ndarray: n x d propagated embedding
    """
    X = _check_rows(op, X)
    if op.variant == PropagationVariant.PLAIN_POWER:
        return plain_power_propagate(op.T, X, op.steps)
    if op.R is not None:
        return op.R @ X
    return _neumann_apply(op.T, X, op.alpha, op.order)


def backprop_propagation(op: PropagationOperator, G_tilde: np.ndarray) -> np.ndarray:
    """
    Gradient of propagate with respect to X: R^T G

    Args:
        op: Propagation operator used in the forward pass
        G_tilde: Upstream gradient with respect to X_tilde

    Returns:
        np.ndarray: Gradient with respect to X
    """
    G_tilde = _check_rows(op, G_tilde)
    if op.variant == PropagationVariant.PLAIN_POWER:
        return plain_power_propagate(op.T_adjoint, G_tilde, op.steps)
    if op.R is not None:
        return op.R.T @ G_tilde
    return _neumann_apply(op.T_adjoint, G_tilde, op.alpha, op.order)


def build_operator(
    T: sp.spmatrix,
    variant: PropagationVariant,
    alpha: float,
    order: int = DEFAULT_NEUMANN_ORDER,
    steps: int = 10,
    dense_node_limit: int = DEFAULT_DENSE_NODE_LIMIT
) -> PropagationOperator:
    """
    Build the configured operator, refusing dense matrices above the node limit

    Args:
        T: Transition matrix
        variant: Requested propagation variant
        alpha: Damping coefficient
        order: Neumann order B
        steps: Plain power steps b
        dense_node_limit: Largest n for which an n x n matrix is materialized

    Returns:
        PropagationOperator: The operator used for training
    """
    variant = PropagationVariant(variant)
    n = T.shape[0]
    too_large = n > dense_node_limit
    if variant == PropagationVariant.PLAIN_POWER:
        return plain_power(T, steps)
    if variant == PropagationVariant.EXACT_STATIONARY and not too_large:
        return exact_stationary(T, alpha)
    if variant == PropagationVariant.EXACT_STATIONARY:
        logger.warning(
            f"{n} nodes exceed the dense limit {dense_node_limit}; "
            f"using a lazy Neumann series of order {order}"
        )
    return neumann_truncated(T, alpha, order, materialize=not too_large)


def inf_norm_gap(R: np.ndarray, R_approx: np.ndarray) -> float:
    """Induced infinity norm (max absolute row sum) of R - R_approx"""
    return float(np.abs(R - R_approx).sum(axis=1).max()) if R.size else 0.0


def power_matrix(T: sp.spmatrix, steps: int) -> np.ndarray:
    """Dense T^b, for diagnostics on small graphs"""
    T = _as_csr(T)
    return plain_power_propagate(T, np.eye(T.shape[0]), steps)
