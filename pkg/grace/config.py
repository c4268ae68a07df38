"""
Configuration models and loading for GRACE runs
"""
import logging
import os
from enum import Enum
from typing import Any, Dict, Optional, Type, TypeVar

import numpy as np
import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from grace.errors import ConfigError

# Configure logging
logger = logging.getLogger(__name__)

# Named random streams; the index is the SeedSequence spawn key
SEED_STREAMS = {"init": 0, "dropout": 1, "kmeans": 2, "sbm": 3}

# Keys holding input file paths, resolved against the config file directory
PATH_KEYS = ("features", "edges", "labels", "out_dir")


class OptimizerRule(str, Enum):
    ACCUMULATED = "accumulated"
    ADAM = "adam"


class PropagationKind(str, Enum):
    EXACT = "exact"
    NEUMANN = "neumann"
    POWER = "power"


class LayerLayout(str, Enum):
    HALVING = "halving"
    UNIFORM = "uniform"


class ContentKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class TrainConfig(BaseModel):
    """
    Hyperparameters of one training run. Field aliases follow the notation
    used in config files (lambda, H, K, T0, T).
    """

    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)

    lam: float = Field(0.1, alias="lambda", ge=0.0)
    alpha: float = Field(0.9, ge=0.0, lt=1.0)
    dropout: float = Field(0.5, ge=0.0, lt=1.0)
    depth: int = Field(2, alias="H", ge=1)
    embed_dim: Optional[int] = Field(None, ge=1)
    n_clusters: int = Field(2, alias="K", ge=2)
    rho: float = Field(1e-3, gt=0.0)
    pretrain_epochs: int = Field(1000, alias="T0", ge=0)
    macro_steps: int = Field(30, alias="T", ge=1)
    micro_steps: int = Field(30, ge=1)
    optimizer: OptimizerRule = OptimizerRule.ACCUMULATED
    seed: int = Field(0, ge=0)
    propagation: PropagationKind = PropagationKind.EXACT
    neumann_order: int = Field(50, ge=0)
    power_steps: int = Field(10, ge=0)
    dense_node_limit: int = Field(20000, ge=1)
    layer_layout: LayerLayout = LayerLayout.HALVING
    hidden_width: Optional[int] = Field(None, ge=1)
    pretrain_tol: float = Field(1e-6, ge=0.0)
    cotrain_tol: Optional[float] = Field(None, ge=0.0)
    checkpoint_every_macro: bool = True

    def resolve_embed_dim(self, kappa: int) -> int:
        """Embedding width for a content dimension kappa (default kappa/4, at least 1)"""
        if self.embed_dim is not None:
            return self.embed_dim
        return max(1, kappa // 4)

    def echo(self) -> Dict[str, Any]:
        """Plain dictionary of the config using file-level key names"""
        return self.model_dump(mode="json", by_alias=True)


class RunConfig(TrainConfig):
    """Training hyperparameters plus dataset locations and run outputs"""

    features: str
    edges: str
    labels: Optional[str] = None
    kind: ContentKind = ContentKind.BINARY
    feature_dim: Optional[int] = Field(None, ge=1)
    out_dir: str = "runs"
    name: str = "dataset"
    log_level: str = "INFO"

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        for key in ("features", "edges", "labels"):
            path = getattr(self, key)
            if path is not None and not os.path.isfile(path):
                raise ValueError(f"{key} file not found: {path}")
        return self


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def read_toml(path: str) -> Dict[str, Any]:
    """
    Read a flat "key = value" TOML file

    Args:
        path: Path of the config file

    Returns:
        Dict: Parsed key/value pairs
    """
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomli.load(f)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"Cannot parse config {path}: {e}") from e


def load_config(
    path: str,
    model: Type[ConfigT] = RunConfig,
    overrides: Optional[Dict[str, Any]] = None
) -> ConfigT:
    """
    Load and validate a config file

    Args:
        path: Path of the TOML config file
        model: Pydantic model to validate against
        overrides: Values taking precedence over the file (e.g. CLI flags)

    Returns:
        The validated config instance
    """
    raw = read_toml(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    for key in PATH_KEYS:
        value = raw.get(key)
        if isinstance(value, str) and not os.path.isabs(value):
            raw[key] = os.path.normpath(os.path.join(base_dir, value))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return validate_config(raw, model)


def validate_config(raw: Dict[str, Any], model: Type[ConfigT] = RunConfig) -> ConfigT:
    """Validate a raw dictionary, converting pydantic failures into ConfigError"""
    try:
        config = model.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid {model.__name__}: {problems}") from e
    logger.debug(f"Validated {model.__name__}: {raw}")
    return config


def stream_rng(seed: int, name: str) -> np.random.Generator:
    """
    Independent random generator for one named stream of a run

    Args:
        seed: The run seed
        name: Stream name (init, dropout, kmeans, sbm)

    Returns:
        np.random.Generator: Generator seeded from (seed, stream)
    """
    if name not in SEED_STREAMS:
        raise ValueError(f"Unknown random stream: {name}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(SEED_STREAMS[name],))
    return np.random.default_rng(sequence)
