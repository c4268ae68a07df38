"""
Sparse adjacency, degree and transition matrices of an attributed graph
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from grace.errors import InputError

# Configure logging
logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """
    Undirected graph with mandatory unit self-loops.

    W is symmetric with w_ii = 1, degree holds d_ii = sum_j w_ij (always >= 1)
    and T = D^-1 W is row-stochastic. All matrices are CSR with sorted indices.
    """

    n: int
    edges: List[Edge]
    W: sp.csr_matrix
    degree: np.ndarray
    T: sp.csr_matrix

    @property
    def m(self) -> int:
        """Number of distinct undirected non-loop edges"""
        return len(self.edges)


def build_adjacency(
    edges: Sequence[Edge],
    n: int,
    weights: Optional[Sequence[float]] = None
) -> Graph:
    """
    Build the symmetrized, self-looped adjacency of a graph

    Args:
        edges: Node pairs; direction is ignored
        n: Number of nodes
        weights: Optional nonnegative weight per edge (default 1)

    Returns:
        Graph: Adjacency W, degrees D and transition matrix T
    """
    if n < 0:
        raise InputError(f"Node count must be nonnegative, got {n}")
    pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if weights is None:
        values = np.ones(len(pairs), dtype=np.float64)
    else:
        values = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(values) != len(pairs):
            raise InputError(f"Got {len(values)} weights for {len(pairs)} edges")
        if not np.all(np.isfinite(values)):
            raise InputError("Edge weights must be finite")
        if np.any(values < 0):
            raise InputError(f"Negative edge weight {values.min()}")
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
        raise InputError(f"Edge ({bad[0]}, {bad[1]}) has an endpoint outside [0, {n})")

    # Self-loops are fixed to 1 below, so explicit ones are dropped here
    off_diagonal = pairs[:, 0] != pairs[:, 1]
    pairs, values = pairs[off_diagonal], values[off_diagonal]

    # Undirected key (min, max); duplicates and reciprocal edges collapse to the max weight
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keys = lo * max(n, 1) + hi
    order = np.argsort(keys, kind="stable")
    keys, values = keys[order], values[order]
    unique_keys, starts = np.unique(keys, return_index=True)
    if len(unique_keys):
        merged = np.maximum.reduceat(values, starts)
    else:
        merged = np.zeros(0, dtype=np.float64)
    positive = merged > 0
    unique_keys, merged = unique_keys[positive], merged[positive]
    u = unique_keys // max(n, 1)
    v = unique_keys % max(n, 1)

    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate([u, v, diag])
    cols = np.concatenate([v, u, diag])
    data = np.concatenate([merged, merged, np.ones(n, dtype=np.float64)])
    W = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
    W.sort_indices()

    degree = np.asarray(W.sum(axis=1)).reshape(-1)
    T = sp.csr_matrix(sp.diags(1.0 / degree) @ W) if n else sp.csr_matrix((0, 0))
    T.sort_indices()

    kept = [(int(a), int(b)) for a, b in zip(u, v)]
    logger.debug(f"Built adjacency with {n} nodes and {len(kept)} undirected edges")
    return Graph(n=n, edges=kept, W=W, degree=degree, T=T)


def spmm(M: sp.spmatrix, X: np.ndarray) -> np.ndarray:
    """
    Sparse-dense product M @ X

    Args:
        M: Sparse n x n matrix
        X: Dense n x d matrix (or length-n vector)

    Returns:
        np.ndarray: Dense product with the shape of X
    """
    X = np.asarray(X, dtype=np.float64)
    if M.shape[1] != X.shape[0]:
        raise InputError(f"Cannot multiply {M.shape} sparse matrix with {X.shape} dense matrix")
    # CSR products accumulate each row sequentially, so results are reproducible
    return np.asarray(sp.csr_matrix(M) @ X)


def read_edge_list(path: str) -> Tuple[List[Edge], Optional[List[float]]]:
    """
    Read a tab-separated edge list

    Args:
        path: File with "u<TAB>v[<TAB>weight]" lines; '#' lines are comments

    Returns:
        Tuple[List, Optional[List]]: Edges and weights (None when no line carries one)
    """
    edges: List[Edge] = []
    weights: List[float] = []
    weighted = False
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields, got {len(parts)}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: {e}") from e
            if u < 0 or v < 0:
                raise InputError(f"{path}:{lineno}: negative node id")
            weighted = weighted or len(parts) == 3
            edges.append((u, v))
            weights.append(w)
    return edges, (weights if weighted else None)


def write_edge_list(path: str, edges: Iterable[Edge], weights: Optional[Iterable[float]] = None) -> None:
    """Write edges in the format read by read_edge_list"""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if weights is None:
            for u, v in edges:
                f.write(f"{u}\t{v}\n")
        else:
            for (u, v), w in zip(edges, weights):
                f.write(f"{u}\t{v}\t{w!r}\n")
