"""
Self-training soft clustering: k-means initialization, Student-t soft assignment,
sharpened target distribution and the KL clustering loss
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from grace.errors import InputError

# Configure logging
logger = logging.getLogger(__name__)

FREQUENCY_FLOOR = 1e-10
PROBABILITY_FLOOR = 1e-12
KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 300


@dataclass
class Centers:
    """K x d matrix of cluster centers in embedding space"""

    U: np.ndarray

    def __post_init__(self) -> None:
        self.U = np.asarray(self.U, dtype=np.float64)
        if self.U.ndim != 2 or self.U.shape[0] < 2:
            raise InputError(f"Need at least 2 centers as a K x d matrix, got shape {self.U.shape}")

    @property
    def K(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class SoftAssignment:
    """Row-stochastic n x K matrix Q with the unnormalized kernel it came from"""

    Q: np.ndarray
    kernel: np.ndarray


@dataclass(frozen=True)
class TargetDistribution:
    """Row-stochastic n x K target P and the soft cluster frequencies f"""

    P: np.ndarray
    f: np.ndarray


def kmeans_init(X: np.ndarray, K: int, seed: int) -> Centers:
    """
    k-means++ seeded Lloyd k-means on an embedding

    Stops after KMEANS_MAX_ITER iterations or once sklearn's convergence test
    passes: the summed squared center shift falls below KMEANS_TOL times the
    mean per-feature variance of X. This is a relative criterion, not an
    absolute per-center shift.

    Args:
        X: n x d points
        K: Number of clusters
        seed: Seed for the k-means++ draws

    Returns:
        Centers: The fitted centers
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < K:
        raise InputError(f"Cannot fit {K} centers to {X.shape[0] if X.ndim == 2 else 0} points")
    model = KMeans(
        n_clusters=K,
        init="k-means++",
        n_init=1,
        max_iter=KMEANS_MAX_ITER,
        tol=KMEANS_TOL,
        algorithm="lloyd",
        random_state=seed,
    )
    with warnings.catch_warnings():
        # Duplicate points with K close to n legitimately yield fewer distinct clusters
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(X)
    logger.info(f"k-means converged after {model.n_iter_} iterations (inertia {model.inertia_:.6g})")
    return Centers(model.cluster_centers_.copy())


def kmeans_labels(X: np.ndarray, K: int, seed: int) -> np.ndarray:
    """Hard labels of the k-means fit used by kmeans_init"""
    X = np.asarray(X, dtype=np.float64)
    centers = kmeans_init(X, K, seed)
    return hard_assign(soft_assign(X, centers).Q)


def _squared_distances(X: np.ndarray, U: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - U[None, :, :]
    return np.einsum("ikd,ikd->ik", diff, diff)


def soft_assign(X_tilde: np.ndarray, centers: Centers) -> SoftAssignment:
    """
    Student-t (one degree of freedom) soft assignment of nodes to centers

    Args:
        X_tilde: n x d propagated embedding
        centers: Cluster centers

    Returns:
        SoftAssignment: q_ik proportional to (1 + ||x_i - u_k||^2)^-1
    """
    X_tilde = np.asarray(X_tilde, dtype=np.float64)
    if X_tilde.ndim != 2 or X_tilde.shape[1] != centers.U.shape[1]:
        raise InputError(f"Embedding shape {X_tilde.shape} does not match centers {centers.U.shape}")
    kernel = 1.0 / (1.0 + _squared_distances(X_tilde, centers.U))
    return SoftAssignment(Q=kernel / kernel.sum(axis=1, keepdims=True), kernel=kernel)


def target_distribution(Q: np.ndarray) -> TargetDistribution:
    """
    Sharpened, frequency-normalized target p_ik = (q_ik^2 / f_k) / sum_j (q_ij^2 / f_j)

    Args:
        Q: Row-stochastic soft assignment

    Returns:
        TargetDistribution: P (read-only) and the frequencies f_k = sum_i q_ik
    """
    Q = np.asarray(Q, dtype=np.float64)
    f = Q.sum(axis=0)
    weight = Q ** 2 / np.maximum(f, FREQUENCY_FLOOR)
    P = weight / weight.sum(axis=1, keepdims=True)
    _log_sharpening_violations(Q, P, f)
    P.setflags(write=False)
    return TargetDistribution(P=P, f=f)


def _log_sharpening_violations(Q: np.ndarray, P: np.ndarray, f: np.ndarray) -> None:
    # Rows whose top cluster is no larger than average must not lose confidence
    top = Q.argmax(axis=1)
    eligible = f[top] <= f.mean()
    weaker = P.max(axis=1) < Q.max(axis=1) - 1e-12
    violations = int(np.count_nonzero(eligible & weaker))
    if violations:
        logger.warning(f"Target distribution failed to sharpen {violations} eligible rows")


def kl_loss(P: np.ndarray, Q: np.ndarray) -> float:
    """
    KL(P || Q) summed over nodes, with 0 log 0 = 0 and q clamped at 1e-12

    Args:
        P: Target distribution
        Q: Soft assignment

    Returns:
        float: Nonnegative divergence
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise InputError(f"KL shapes differ: {P.shape} vs {Q.shape}")
    support = P > 0
    p = P[support]
    q = np.maximum(Q[support], PROBABILITY_FLOOR)
    return float(np.sum(p * np.log(p / q)))


def kl_gradients(
    P: np.ndarray,
    Q: np.ndarray,
    X_tilde: np.ndarray,
    U: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of KL(P || Q) with P held fixed

    dJ2/dx_i = 2 sum_k k_ik (p_ik - q_ik)(x_i - u_k) with k_ik = (1 + ||x_i - u_k||^2)^-1,
    and dJ2/du_k is minus the same summand summed over nodes.

    Args:
        P: Fixed target distribution
        Q: Soft assignment computed from X_tilde and U
        X_tilde: n x d propagated embedding
        U: K x d centers

    Returns:
        Tuple[np.ndarray, np.ndarray]: Gradients with respect to X_tilde and U
    """
    X_tilde = np.asarray(X_tilde, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    diff = X_tilde[:, None, :] - U[None, :, :]
    kernel = 1.0 / (1.0 + np.einsum("ikd,ikd->ik", diff, diff))
    coefficient = 2.0 * kernel * (P - Q)
    summand = coefficient[:, :, None] * diff
    return summand.sum(axis=1), -summand.sum(axis=0)


def hard_assign(Q: np.ndarray) -> np.ndarray:
    """Most probable cluster per node; ties go to the lowest index"""
    return np.asarray(Q).argmax(axis=1)
