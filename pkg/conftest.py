"""
Shared pytest fixtures
"""
from typing import List, Tuple

import numpy as np
import pytest

from grace.config import TrainConfig
from grace.data.datasets import Dataset
from grace.data.sbm import SbmParams
from grace.graph.adjacency import build_adjacency
from grace.metrics.scores import ClusterSet
from grace.models.grace_model import GraceModel
from grace.propagation.operator import exact_stationary


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end training runs (deselect with -m 'not slow')")


def random_edges(rng: np.random.Generator, n: int, p: float) -> List[Tuple[int, int]]:
    """Erdos-Renyi style edge list with u < v"""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_config():
    return TrainConfig(
        **{
            "lambda": 0.1,
            "alpha": 0.9,
            "dropout": 0.5,
            "H": 2,
            "embed_dim": 4,
            "K": 2,
            "rho": 1e-3,
            "T0": 20,
            "T": 2,
            "micro_steps": 5,
            "seed": 3,
        }
    )


@pytest.fixture
def tiny_dataset():
    """12 nodes in two loosely linked groups of 6, 10 binary attributes"""
    rng = np.random.default_rng(11)
    blocks = np.repeat([0, 1], 6)
    signature = np.zeros((12, 10))
    signature[blocks == 0, :3] = 1.0
    signature[blocks == 1, 3:6] = 1.0
    noise = rng.random((12, 10)) < 0.15
    A = np.logical_xor(signature > 0, noise).astype(np.float64)
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4),
             (6, 7), (7, 8), (8, 9), (9, 10), (10, 11), (6, 11), (7, 10),
             (5, 6)]
    return Dataset(A=A, content_kind="binary", edges=edges, truth=ClusterSet.from_labels(blocks), name="tiny")


@pytest.fixture
def tiny_graph(tiny_dataset):
    return build_adjacency(tiny_dataset.edges, tiny_dataset.n)


@pytest.fixture
def tiny_model(tiny_dataset, tiny_graph, tiny_config):
    prop = exact_stationary(tiny_graph.T, tiny_config.alpha)
    return GraceModel.build(tiny_dataset.kappa, tiny_config, prop, tiny_dataset.content_kind)


@pytest.fixture
def sbm_params():
    return SbmParams()


@pytest.fixture
def small_sbm_params():
    return SbmParams(K_blocks=2, nodes_per_block=15, p_in=0.4, p_out=0.02, sig_per_block=3, noise_attrs=6, seed=5)
