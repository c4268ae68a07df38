"""
F1 and Jaccard similarity between detected and ground-truth cluster collections
"""
import logging
from dataclasses import dataclass
from typing import AbstractSet, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from grace.errors import InputError

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterSet:
    """Collection of node-id sets; clusters may overlap and need not cover every node"""

    clusters: List[frozenset]
    ids: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        for cluster in self.clusters:
            if not cluster:
                raise InputError("Clusters must be nonempty")
        if self.ids is not None and len(self.ids) != len(self.clusters):
            raise InputError(f"Got {len(self.ids)} cluster ids for {len(self.clusters)} clusters")

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    @staticmethod
    def from_sets(sets: Iterable[Iterable[int]]) -> "ClusterSet":
        return ClusterSet([frozenset(int(i) for i in s) for s in sets])

    @staticmethod
    def from_labels(labels: Sequence[int]) -> "ClusterSet":
        """Partition induced by hard labels; empty clusters never appear"""
        groups: Dict[int, set] = {}
        for node, label in enumerate(labels):
            groups.setdefault(int(label), set()).add(node)
        keys = sorted(groups)
        return ClusterSet([frozenset(groups[k]) for k in keys], ids=tuple(keys))

    @staticmethod
    def from_pairs(pairs: Iterable[Tuple[int, int]]) -> "ClusterSet":
        """Clusters from (node, cluster id) pairs; a node may appear in several clusters"""
        groups: Dict[int, set] = {}
        for node, cluster in pairs:
            groups.setdefault(int(cluster), set()).add(int(node))
        keys = sorted(groups)
        return ClusterSet([frozenset(groups[k]) for k in keys], ids=tuple(keys))

    def cluster_id(self, k: int) -> int:
        return k if self.ids is None else self.ids[k]

    def max_node(self) -> int:
        return max((max(c) for c in self.clusters), default=-1)

    def membership(self, n: int) -> np.ndarray:
        """Smallest cluster id holding each node, -1 when the node is in no cluster"""
        out = np.full(n, -1, dtype=np.int64)
        for k, cluster in enumerate(self.clusters):
            for node in cluster:
                if 0 <= node < n and out[node] < 0:
                    out[node] = self.cluster_id(k)
        return out


def _check_pair(c: AbstractSet[int], c_star: AbstractSet[int]) -> int:
    if not c or not c_star:
        raise InputError("Cluster similarity is undefined for empty clusters")
    return len(c & c_star)


def f1_pair(c: AbstractSet[int], c_star: AbstractSet[int]) -> float:
    """
    Harmonic mean of precision |c & c*| / |c*| and recall |c & c*| / |c|

    Args:
        c: Ground-truth cluster
        c_star: Detected cluster

    Returns:
        float: F1 in [0, 1], 0 when there is no overlap
    """
    common = _check_pair(c, c_star)
    if common == 0:
        return 0.0
    precision = common / len(c_star)
    recall = common / len(c)
    return 2.0 * precision * recall / (precision + recall)


def jc_pair(c: AbstractSet[int], c_star: AbstractSet[int]) -> float:
    """Jaccard similarity |c & c*| / |c | c*|"""
    common = _check_pair(c, c_star)
    return common / len(c | c_star)


def _as_cluster_set(clusters) -> ClusterSet:
    collection = clusters if isinstance(clusters, ClusterSet) else ClusterSet.from_sets(clusters)
    if len(collection) == 0:
        raise InputError("Cluster collections must be nonempty")
    return collection


def f1_sets(truth, detected) -> float:
    """
    Size-weighted best-match F1 of every detected cluster

    Args:
        truth: Ground-truth clusters C
        detected: Detected clusters C*

    Returns:
        float: sum over c* of |c*| / sum|c*| * max_c F1(c, c*)
    """
    truth = _as_cluster_set(truth)
    detected = _as_cluster_set(detected)
    total = sum(len(c_star) for c_star in detected)
    score = 0.0
    for c_star in detected:
        best = max(f1_pair(c, c_star) for c in truth)
        score += len(c_star) / total * best
    return score


def jc_sets(truth, detected) -> float:
    """
    Symmetric best-match Jaccard similarity

    Args:
        truth: Ground-truth clusters C
        detected: Detected clusters C*

    Returns:
        float: Half the mean best match of C in C* plus half the mean best match of C* in C
    """
    truth = _as_cluster_set(truth)
    detected = _as_cluster_set(detected)
    forward = sum(max(jc_pair(c, c_star) for c_star in detected) for c in truth)
    backward = sum(max(jc_pair(c, c_star) for c in truth) for c_star in detected)
    return forward / (2 * len(truth)) + backward / (2 * len(detected))


def score_labels(truth: ClusterSet, labels: Sequence[int]) -> Dict[str, float]:
    """F1 and JC of the partition induced by hard labels"""
    detected = ClusterSet.from_labels(labels)
    return {"F1": f1_sets(truth, detected), "JC": jc_sets(truth, detected)}
