"""
Versioned model checkpoints: a "GRACE1" header line followed by a JSON document
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from grace.clustering.assignment import Centers
from grace.config import ContentKind
from grace.errors import InputError
from grace.models.grace_model import GraceModel
from grace.nn.activations import Activation
from grace.nn.layers import DenseLayer
from grace.propagation.operator import PropagationOperator

# Configure logging
logger = logging.getLogger(__name__)

MAGIC = "GRACE1"


@dataclass
class Checkpoint:
    """Layer shapes and parameters, centers, config echo and dropout RNG state"""

    layers: List[Dict[str, Any]]
    content_kind: str
    lam: float
    dropout: float
    centers: Optional[List[List[float]]] = None
    config: Dict[str, Any] = field(default_factory=dict)
    rng_state: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_model(
        model: GraceModel,
        config: Optional[Dict[str, Any]] = None,
        extra: Optional[Dict[str, Any]] = None
    ) -> "Checkpoint":
        """Snapshot of a model's parameters"""
        layers = []
        for name, layer in zip(model.layer_names(), model.layers):
            layers.append({
                "name": name,
                "shape": list(layer.weight.shape),
                "activation": layer.activation.value,
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
            })
        return Checkpoint(
            layers=layers,
            content_kind=model.content_kind.value,
            lam=model.lam,
            dropout=model.dropout,
            centers=None if model.centers is None else model.centers.U.tolist(),
            config=dict(config or {}),
            rng_state=model.dropout_rng.bit_generator.state,
            extra=dict(extra or {}),
        )

    def to_model(self, prop: PropagationOperator) -> GraceModel:
        """
        Rebuild the model on a propagation operator

        Args:
            prop: Operator of the graph the model was trained on

        Returns:
            GraceModel: Model with restored parameters and RNG state
        """
        built = []
        for index, entry in enumerate(self.layers):
            try:
                weight = np.asarray(entry["weight"], dtype=np.float64).reshape(entry["shape"])
                bias = np.asarray(entry["bias"], dtype=np.float64)
                activation = Activation(entry["activation"])
            except KeyError as e:
                raise InputError(f"Checkpoint layer {index} is missing field {e}") from e
            except (TypeError, ValueError) as e:
                raise InputError(f"Checkpoint layer {index} is malformed: {e}") from e
            built.append(DenseLayer(weight, bias, activation))
        depth = len(built) // 2
        rng = np.random.default_rng()
        if self.rng_state is not None:
            rng.bit_generator.state = self.rng_state
        return GraceModel(
            built[:depth],
            built[depth:],
            prop,
            content_kind=ContentKind(self.content_kind),
            lam=self.lam,
            dropout=self.dropout,
            dropout_rng=rng,
            centers=None if self.centers is None else Centers(np.asarray(self.centers, dtype=np.float64)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layers": self.layers,
            "content_kind": self.content_kind,
            "lambda": self.lam,
            "dropout": self.dropout,
            "centers": self.centers,
            "config": self.config,
            "rng_state": self.rng_state,
            "extra": self.extra,
        }

    @staticmethod
    def from_dict(payload: Dict[str, Any]) -> "Checkpoint":
        try:
            return Checkpoint(
                layers=payload["layers"],
                content_kind=payload["content_kind"],
                lam=payload["lambda"],
                dropout=payload["dropout"],
                centers=payload.get("centers"),
                config=payload.get("config", {}),
                rng_state=payload.get("rng_state"),
                extra=payload.get("extra", {}),
            )
        except KeyError as e:
            raise InputError(f"Checkpoint is missing field {e}") from e


def save_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    """
    Write a checkpoint; equal contents always give byte-identical files

    Args:
        path: Destination file
        checkpoint: The checkpoint to store
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(MAGIC + "\n")
        json.dump(checkpoint.to_dict(), f, sort_keys=True, allow_nan=False)
        f.write("\n")
    logger.info(f"Checkpoint written to {path}")


def load_checkpoint(path: str) -> Checkpoint:
    """
    Read a checkpoint written by save_checkpoint

    Args:
        path: Checkpoint file

    Returns:
        Checkpoint: The stored checkpoint
    """
    if not os.path.isfile(path):
        raise InputError(f"Checkpoint not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != MAGIC:
            raise InputError(f"{path} is not a GRACE checkpoint (header {header!r})")
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"Corrupt checkpoint {path}: {e}") from e
    return Checkpoint.from_dict(payload)
