"""
Two-dimensional PCA projection of embeddings for visualization dumps
"""
import logging
from dataclasses import dataclass

import numpy as np

from grace.errors import InputError

# Configure logging
logger = logging.getLogger(__name__)

RANK_TOL = 1e-12


@dataclass(frozen=True)
class PcaProjection:
    """Mean, top-2 principal directions (as columns) and projected coordinates"""

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    coordinates: np.ndarray


def fit_pca(X: np.ndarray) -> PcaProjection:
    """
    Project onto the top-2 eigenvectors of the covariance matrix

    Each direction's sign is fixed so that its largest-magnitude entry is
    positive. A second direction with no variance is zero-filled.

    Args:
        X: n x d data, n >= 2 and d >= 2

    Returns:
        PcaProjection: Fitted projection
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise InputError(f"PCA needs at least 2 rows and 2 columns, got shape {X.shape}")
    mean = X.mean(axis=0)
    centered = X - mean
    covariance = centered.T @ centered / (X.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(-eigenvalues, kind="stable")[:2]
    variances = np.maximum(eigenvalues[order], 0.0)
    components = eigenvectors[:, order]
    for j in range(2):
        pivot = np.argmax(np.abs(components[:, j]))
        if components[pivot, j] < 0:
            components[:, j] = -components[:, j]
    scale = max(variances[0], 1.0)
    for j in range(2):
        if variances[j] <= RANK_TOL * scale:
            logger.warning(f"Data has rank below {j + 1} after centering; principal axis {j + 1} zero-filled")
            components[:, j] = 0.0
            variances[j] = 0.0
    return PcaProjection(mean=mean, components=components, variances=variances, coordinates=centered @ components)


def pca_2d(X: np.ndarray) -> np.ndarray:
    """n x 2 coordinates of X on its two principal directions"""
    return fit_pca(X).coordinates
