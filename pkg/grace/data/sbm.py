"""
Seeded attributed stochastic block model for ground-truth clustering experiments
"""
import logging
import os
from typing import Dict, List

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from grace.config import ContentKind, stream_rng
from grace.data.datasets import Dataset, save_dataset
from grace.metrics.scores import ClusterSet

# Configure logging
logger = logging.getLogger(__name__)

PARAMS_FILE = "params.txt"


class SbmParams(BaseModel):
    """Block structure, edge probabilities and attribute firing rates"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    K_blocks: int = Field(3, ge=1)
    nodes_per_block: int = Field(100, ge=1)
    p_in: float = Field(0.15, ge=0.0, le=1.0)
    p_out: float = Field(0.01, ge=0.0, le=1.0)
    sig_per_block: int = Field(5, ge=1)
    noise_attrs: int = Field(50, ge=1)
    p_sig_on: float = Field(0.8, ge=0.0, le=1.0)
    p_noise_on: float = Field(0.1, ge=0.0, le=1.0)
    p_flip: float = Field(0.05, ge=0.0, le=1.0)
    seed: int = Field(7, ge=0)

    @property
    def n(self) -> int:
        return self.K_blocks * self.nodes_per_block

    @property
    def kappa(self) -> int:
        return self.K_blocks * self.sig_per_block + self.noise_attrs

    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.K_blocks), self.nodes_per_block)


def firing_probabilities(params: SbmParams) -> np.ndarray:
    """
    n x kappa matrix of per-entry attribute probabilities

    Signature columns come first, block k owning columns
    [k * sig_per_block, (k + 1) * sig_per_block); noise columns follow.
    """
    blocks = params.block_of()
    signature_owner = np.repeat(np.arange(params.K_blocks), params.sig_per_block)
    signature = np.where(blocks[:, None] == signature_owner[None, :], params.p_sig_on, params.p_flip)
    noise = np.full((params.n, params.noise_attrs), params.p_noise_on)
    return np.hstack([signature, noise])


def generate_sbm(params: SbmParams) -> Dataset:
    """
    Sample an attributed graph with planted blocks

    Args:
        params: Generator parameters; the seed fixes the whole dataset

    Returns:
        Dataset: Binary contents, edges (u < v, sorted) and the blocks as truth
    """
    rng = stream_rng(params.seed, "sbm")
    graph_seed = int(rng.integers(2 ** 31 - 1))
    sizes = [params.nodes_per_block] * params.K_blocks
    probabilities = [
        [params.p_in if a == b else params.p_out for b in range(params.K_blocks)]
        for a in range(params.K_blocks)
    ]
    G = nx.stochastic_block_model(sizes, probabilities, seed=graph_seed)
    edges = sorted((min(u, v), max(u, v)) for u, v in G.edges() if u != v)

    A = (rng.random((params.n, params.kappa)) < firing_probabilities(params)).astype(np.float64)
    truth = ClusterSet.from_labels(params.block_of())
    logger.info(
        f"Generated SBM: {params.K_blocks} blocks x {params.nodes_per_block} nodes, "
        f"{len(edges)} edges, {int(A.sum())} active attributes"
    )
    return Dataset(
        A=A,
        content_kind=ContentKind.BINARY,
        edges=edges,
        truth=truth,
        name=f"sbm-{params.seed}",
    )


def expected_counts(params: SbmParams) -> Dict[str, float]:
    """Binomial means and variances of the edge and active-attribute counts"""
    intra_pairs = params.K_blocks * params.nodes_per_block * (params.nodes_per_block - 1) / 2
    inter_pairs = params.n * (params.n - 1) / 2 - intra_pairs
    probs = firing_probabilities(params)
    return {
        "edges_mean": intra_pairs * params.p_in + inter_pairs * params.p_out,
        "edges_var": intra_pairs * params.p_in * (1 - params.p_in) + inter_pairs * params.p_out * (1 - params.p_out),
        "features_mean": float(probs.sum()),
        "features_var": float((probs * (1 - probs)).sum()),
    }


def format_params(params: SbmParams) -> str:
    """Params as flat TOML, readable back by load_config(..., model=SbmParams)"""
    lines: List[str] = []
    for key, value in params.model_dump().items():
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def write_sbm(params: SbmParams, out_dir: str) -> Dict[str, str]:
    """
    Generate a dataset and write features.tsv, edges.tsv, labels.tsv and params.txt

    Args:
        params: Generator parameters
        out_dir: Destination directory

    Returns:
        Dict: Paths of the written files keyed by role
    """
    dataset = generate_sbm(params)
    paths = save_dataset(dataset, out_dir)
    paths["params"] = os.path.join(out_dir, PARAMS_FILE)
    with open(paths["params"], "w", encoding="utf-8", newline="\n") as f:
        f.write(format_params(params))
    return paths
