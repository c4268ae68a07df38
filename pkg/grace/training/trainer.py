"""
Training orchestration: autoencoder pre-training, k-means center initialization
and the macro/micro self-training co-training loop
"""
import csv
import hashlib
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from grace.clustering.assignment import (
    Centers,
    hard_assign,
    kl_loss,
    kmeans_init,
    kmeans_labels,
    target_distribution,
)
from grace.config import TrainConfig, stream_rng
from grace.errors import NumericalError, StateError
from grace.models.checkpoint import Checkpoint, save_checkpoint
from grace.models.grace_model import GraceModel
from grace.nn.optim import OptimizerState, optimizer_step

# Configure logging
logger = logging.getLogger(__name__)

LOG_COLUMNS = ("phase", "step", "J1", "J2", "J")


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


@dataclass
class TrainLog:
    """Per-step losses of a run, in the order they were produced"""

    rows: List[Tuple[str, int, float, Optional[float], float]] = field(default_factory=list)

    def add(self, phase: str, step: int, J1: float, J2: Optional[float], J: float) -> None:
        self.rows.append((phase, step, J1, J2, J))

    def column(self, name: str, phase: Optional[str] = None) -> List[Optional[float]]:
        index = LOG_COLUMNS.index(name)
        return [row[index] for row in self.rows if phase is None or row[0] == phase]

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(LOG_COLUMNS)
            for phase, step, J1, J2, J in self.rows:
                writer.writerow([phase, step, _fmt(J1), _fmt(J2), _fmt(J)])


@dataclass
class MacroStep:
    """Clustering loss against one fixed target, before and after its micro-steps"""

    index: int
    J2_start: float
    J2_end: float
    target_checksum: str


@dataclass
class TrainResult:
    Q: np.ndarray
    labels: np.ndarray
    pretrain_trace: List[float]
    macro_steps: List[MacroStep]
    log: TrainLog


def _checksum(P: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(P).tobytes()).hexdigest()


class GraceTrainer:
    """
    Runs pre-training and co-training on one model with a single optimizer
    state, so co-training continues the accumulators of pre-training.
    """

    def __init__(
        self,
        config: TrainConfig,
        checkpoint_path: Optional[str] = None,
        log: Optional[TrainLog] = None
    ):
        """
        Initialize the trainer

        Args:
            config: Training hyperparameters
            checkpoint_path: Where to write a checkpoint after every macro-step (optional)
            log: Loss log to append to (default: a new one)
        """
        self.config = config
        self.checkpoint_path = checkpoint_path
        self.log = log if log is not None else TrainLog()
        self.optimizer = OptimizerState(rule=config.optimizer, rho=config.rho)
        self.pretrain_steps = 0
        self.cotrain_steps = 0
        logger.info(
            f"Trainer initialized: T0={config.pretrain_epochs}, T={config.macro_steps}, "
            f"S={config.micro_steps}, lambda={config.lam}, optimizer={config.optimizer.value}"
        )

    def pretrain(self, model: GraceModel, A: np.ndarray, epochs: Optional[int] = None) -> List[float]:
        """
        Minimize the reconstruction loss alone

        Args:
            model: Model to train in place
            A: n x kappa contents
            epochs: Number of full-batch steps (default config T0)

        Returns:
            List[float]: J1 at every epoch, measured before its update
        """
        epochs = self.config.pretrain_epochs if epochs is None else epochs
        trace: List[float] = []
        for epoch in range(1, epochs + 1):
            result = model.forward(A, training=True, with_clustering=False)
            if not np.isfinite(result.J1):
                raise NumericalError(f"Reconstruction loss diverged at pre-training epoch {epoch}")
            trace.append(result.J1)
            self.pretrain_steps += 1
            self.log.add("pretrain", self.pretrain_steps, result.J1, None, result.J1)
            grads = model.backward(result)
            optimizer_step(self.optimizer, model.parameters(include_centers=False), grads)
            model.check_finite()
            if epoch % 100 == 0:
                logger.info(f"Pre-training epoch {epoch}/{epochs}: J1={result.J1:.6f}")
            if result.J1 < self.config.pretrain_tol:
                logger.info(f"Pre-training stopped early at epoch {epoch} (J1={result.J1:.3e})")
                break
        return trace

    def kmeans_seed(self) -> int:
        return int(stream_rng(self.config.seed, "kmeans").integers(2 ** 31 - 1))

    def init_centers(self, model: GraceModel, A: np.ndarray) -> Centers:
        """Run k-means on the propagated pre-trained embedding and install the centers"""
        X_tilde = model.propagated_embedding(A)
        model.centers = kmeans_init(X_tilde, self.config.n_clusters, self.kmeans_seed())
        return model.centers

    def cotrain(self, model: GraceModel, A: np.ndarray) -> TrainResult:
        """
        Self-training: each macro-step fixes P from the current Q, then takes
        micro-steps on J = J1 + lambda J2 updating encoder, decoder and centers

        Args:
            model: Pre-trained model (centers are initialized here if missing)
            A: n x kappa contents

        Returns:
            TrainResult: Final Q, hard labels, traces and the loss log
        """
        if model.centers is None:
            self.init_centers(model, A)
        clustering_active = model.lam > 0
        macro_steps: List[MacroStep] = []
        for t in range(1, self.config.macro_steps + 1):
            current = model.forward(A, training=False)
            target = target_distribution(current.Q)
            checksum = _checksum(target.P)
            J2_start = kl_loss(target.P, current.Q)

            for _ in range(self.config.micro_steps):
                result = model.forward(A, training=True, target=target)
                if not np.isfinite(result.J):
                    raise NumericalError(f"Joint loss diverged at co-training step {self.cotrain_steps + 1}")
                self.cotrain_steps += 1
                self.log.add(
                    "cotrain",
                    self.cotrain_steps,
                    result.J1,
                    result.J2 if clustering_active else None,
                    result.J,
                )
                grads = model.backward(result)
                optimizer_step(self.optimizer, model.parameters(), grads)
                model.check_finite()

            if _checksum(target.P) != checksum:
                raise StateError(f"Target distribution changed during macro-step {t}")
            after = model.forward(A, training=False)
            J2_end = kl_loss(target.P, after.Q)
            macro_steps.append(MacroStep(index=t, J2_start=J2_start, J2_end=J2_end, target_checksum=checksum))
            logger.info(
                f"Macro-step {t}/{self.config.macro_steps}: J1={after.J1:.6f} "
                f"J2 {J2_start:.6f} -> {J2_end:.6f}"
            )
            if self.checkpoint_path and self.config.checkpoint_every_macro:
                save_checkpoint(
                    self.checkpoint_path,
                    Checkpoint.from_model(model, self.config.echo(), extra={"macro_step": t}),
                )
            tol = self.config.cotrain_tol
            if tol is not None and after.J1 < tol and J2_end < tol:
                logger.info(f"Co-training stopped after macro-step {t}: both losses below {tol}")
                break

        final = model.forward(A, training=False)
        return TrainResult(
            Q=final.Q,
            labels=hard_assign(final.Q),
            pretrain_trace=[],
            macro_steps=macro_steps,
            log=self.log,
        )

    def fit(self, model: GraceModel, A: np.ndarray) -> TrainResult:
        """Pre-training, center initialization and co-training in sequence"""
        trace = self.pretrain(model, A)
        self.init_centers(model, A)
        result = self.cotrain(model, A)
        result.pretrain_trace = trace
        return result


def pretrain(model: GraceModel, A: np.ndarray, config: TrainConfig) -> List[float]:
    """Pre-train a model with a fresh trainer; returns the J1 trace"""
    return GraceTrainer(config).pretrain(model, A)


def cotrain(model: GraceModel, A: np.ndarray, config: TrainConfig) -> TrainResult:
    """Co-train a pre-trained model with a fresh trainer"""
    return GraceTrainer(config).cotrain(model, A)


def raw_feature_baseline(A: np.ndarray, K: int, seed: int) -> np.ndarray:
    """Hard labels of k-means run directly on the raw contents"""
    kmeans_seed = int(stream_rng(seed, "kmeans").integers(2 ** 31 - 1))
    return kmeans_labels(np.asarray(A, dtype=np.float64), K, kmeans_seed)
