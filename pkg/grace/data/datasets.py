"""
Attributed graph datasets: loading, validation and saving
"""
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from grace.config import ContentKind
from grace.errors import InputError
from grace.graph.adjacency import Edge, Graph, build_adjacency, read_edge_list, write_edge_list
from grace.metrics.scores import ClusterSet

# Configure logging
logger = logging.getLogger(__name__)

FEATURES_FILE = "features.tsv"
EDGES_FILE = "edges.tsv"
LABELS_FILE = "labels.tsv"


@dataclass
class Dataset:
    """Contents A (n x kappa), undirected edges and optional ground-truth clusters"""

    A: np.ndarray
    content_kind: ContentKind
    edges: List[Edge]
    truth: Optional[ClusterSet] = None
    name: str = "dataset"
    weights: Optional[List[float]] = None

    def __post_init__(self) -> None:
        self.A = np.asarray(self.A, dtype=np.float64)
        self.content_kind = ContentKind(self.content_kind)
        if self.A.ndim != 2:
            raise InputError(f"Contents must be a matrix, got shape {self.A.shape}")
        if self.content_kind == ContentKind.BINARY and not np.all((self.A == 0.0) | (self.A == 1.0)):
            raise InputError("Binary contents may only hold 0 and 1")
        if self.truth is not None and self.truth.max_node() >= self.n:
            raise InputError(f"Ground truth references node {self.truth.max_node()} but n={self.n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def kappa(self) -> int:
        return self.A.shape[1]

    def graph(self) -> Graph:
        return build_adjacency(self.edges, self.n, self.weights)


def _data_lines(path: str):
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if line.strip():
                yield lineno, line


def _parse_header(line: str) -> Dict[str, int]:
    # "# nodes N features K"
    tokens = line.lstrip("#").split()
    header = {}
    for key, value in zip(tokens[::2], tokens[1::2]):
        if value.isdigit():
            header[key.lower()] = int(value)
    return header


def _parse_value(path: str, lineno: int, text: str, kind: ContentKind) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise InputError(f"{path}:{lineno}: cannot parse value {text!r}") from e
    if not np.isfinite(value):
        raise InputError(f"{path}:{lineno}: non-finite value {text!r}")
    if kind == ContentKind.BINARY and value not in (0.0, 1.0):
        raise InputError(f"{path}:{lineno}: binary contents may only hold 0 or 1, got {text!r}")
    return value


def read_features(
    path: str,
    kind: ContentKind = ContentKind.BINARY,
    feature_dim: Optional[int] = None
) -> Tuple[Optional[np.ndarray], List[Tuple[int, int, float]], int, int]:
    """
    Read dense CSV rows or sparse "node<TAB>feature<TAB>value" triplets

    Args:
        path: Feature file
        kind: Content kind, used to validate values
        feature_dim: Content dimension for triplet files without a header

    Returns:
        Tuple: (dense rows or None, triplets, rows implied, kappa)
    """
    kind = ContentKind(kind)
    header: Dict[str, int] = {}
    rows: List[List[float]] = []
    triplets: List[Tuple[int, int, float]] = []
    sparse_format: Optional[bool] = None
    seen = set()
    for lineno, line in _data_lines(path):
        if line.startswith("#"):
            header.update(_parse_header(line))
            continue
        is_triplet = "\t" in line
        if sparse_format is None:
            sparse_format = is_triplet
        elif sparse_format != is_triplet:
            raise InputError(f"{path}:{lineno}: mixes dense and triplet feature lines")
        if is_triplet:
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected node<TAB>feature<TAB>value")
            try:
                node, feature = int(parts[0]), int(parts[1])
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: {e}") from e
            if node < 0 or feature < 0:
                raise InputError(f"{path}:{lineno}: negative node or feature id")
            if (node, feature) in seen:
                raise InputError(f"{path}:{lineno}: duplicate entry for node {node}, feature {feature}")
            seen.add((node, feature))
            triplets.append((node, feature, _parse_value(path, lineno, parts[2], kind)))
        else:
            values = [_parse_value(path, lineno, token.strip(), kind) for token in line.split(",")]
            if rows and len(values) != len(rows[0]):
                raise InputError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(values)}")
            rows.append(values)

    if sparse_format is False:
        kappa = len(rows[0])
        if feature_dim is not None and feature_dim != kappa:
            raise InputError(f"{path}: rows have {kappa} columns but feature_dim={feature_dim}")
        return np.asarray(rows, dtype=np.float64), [], len(rows), kappa

    max_feature = max((f for _, f, _ in triplets), default=-1)
    kappa = feature_dim if feature_dim is not None else header.get("features", max_feature + 1)
    if max_feature >= kappa:
        raise InputError(f"{path}: feature id {max_feature} outside the declared dimension {kappa}")
    if kappa < 1:
        raise InputError(f"{path}: cannot infer the content dimension")
    implied = max(header.get("nodes", 0), max((node for node, _, _ in triplets), default=-1) + 1)
    return None, triplets, implied, kappa


def read_cluster_pairs(path: str) -> List[Tuple[int, int]]:
    """Read "node<TAB>cluster" lines (labels or predictions)"""
    pairs: List[Tuple[int, int]] = []
    for lineno, line in _data_lines(path):
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected node<TAB>cluster")
        try:
            node, cluster = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise InputError(f"{path}:{lineno}: {e}") from e
        if node < 0:
            raise InputError(f"{path}:{lineno}: negative node id")
        pairs.append((node, cluster))
    return pairs


def read_clusters(path: str, n: Optional[int] = None) -> ClusterSet:
    """
    Read a cluster membership file

    Args:
        path: File of "node<TAB>cluster" lines
        n: Node count to validate against (optional)

    Returns:
        ClusterSet: One cluster per distinct cluster id
    """
    pairs = read_cluster_pairs(path)
    if n is not None:
        for node, _ in pairs:
            if node >= n:
                raise InputError(f"{path}: node {node} is outside the dataset (n={n})")
    if not pairs:
        raise InputError(f"{path}: no cluster memberships")
    return ClusterSet.from_pairs(pairs)


def load_dataset(
    feature_path: str,
    edge_path: str,
    label_path: Optional[str] = None,
    kind: ContentKind = ContentKind.BINARY,
    feature_dim: Optional[int] = None,
    name: Optional[str] = None
) -> Dataset:
    """
    Load an attributed graph from files

    n is inferred as the largest node id in the feature and edge files plus one;
    nodes without feature entries get zero contents. Label files may place a
    node in several clusters but may not introduce new nodes.

    Args:
        feature_path: Dense CSV or sparse triplet feature file
        edge_path: Tab-separated edge list
        label_path: Optional "node<TAB>cluster" ground truth
        kind: binary or continuous contents
        feature_dim: Content dimension for triplet files without a header
        name: Dataset label (default: the feature file's directory name)

    Returns:
        Dataset: The validated dataset
    """
    kind = ContentKind(kind)
    for path in (feature_path, edge_path, label_path):
        if path is not None and not os.path.isfile(path):
            raise InputError(f"File not found: {path}")
    dense, triplets, feature_rows, kappa = read_features(feature_path, kind, feature_dim)
    edges, weights = read_edge_list(edge_path)
    max_edge_node = max((max(u, v) for u, v in edges), default=-1)
    n = max(feature_rows, max_edge_node + 1)

    A = np.zeros((n, kappa), dtype=np.float64)
    if dense is not None:
        A[: dense.shape[0]] = dense
    for node, feature, value in triplets:
        A[node, feature] = value

    truth = read_clusters(label_path, n) if label_path is not None else None
    name = name or os.path.basename(os.path.dirname(os.path.abspath(feature_path)))
    logger.info(f"Loaded dataset {name}: n={n}, kappa={kappa}, edges={len(edges)}, kind={kind.value}")
    return Dataset(A=A, content_kind=kind, edges=edges, truth=truth, name=name, weights=weights)


def write_clusters(path: str, pairs: Sequence[Tuple[int, int]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for node, cluster in pairs:
            f.write(f"{node}\t{cluster}\n")


def write_assignments(path: str, labels: Sequence[int]) -> None:
    """Write hard labels as "node<TAB>cluster" lines"""
    write_clusters(path, [(i, int(label)) for i, label in enumerate(labels)])


def truth_pairs(truth: ClusterSet) -> List[Tuple[int, int]]:
    pairs = []
    for k, cluster in enumerate(truth.clusters):
        pairs.extend((node, truth.cluster_id(k)) for node in cluster)
    return sorted(pairs)


def save_dataset(dataset: Dataset, out_dir: str) -> Dict[str, str]:
    """
    Write a dataset as sparse feature triplets, an edge list and labels

    Args:
        dataset: Dataset to write
        out_dir: Destination directory (created if needed)

    Returns:
        Dict: Paths of the written files keyed by role
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "features": os.path.join(out_dir, FEATURES_FILE),
        "edges": os.path.join(out_dir, EDGES_FILE),
    }
    with open(paths["features"], "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# nodes {dataset.n} features {dataset.kappa}\n")
        for node, feature in zip(*np.nonzero(dataset.A)):
            f.write(f"{node}\t{feature}\t{float(dataset.A[node, feature])!r}\n")
    write_edge_list(paths["edges"], dataset.edges, dataset.weights)
    if dataset.truth is not None:
        paths["labels"] = os.path.join(out_dir, LABELS_FILE)
        write_clusters(paths["labels"], truth_pairs(dataset.truth))
    logger.info(f"Saved dataset {dataset.name} to {out_dir}")
    return paths
