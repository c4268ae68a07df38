"""
GRACE model: denoise autoencoder, influence propagation and self-training clustering
combined into the joint loss J = J1 + lambda * J2
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from grace.clustering.assignment import (
    Centers,
    SoftAssignment,
    TargetDistribution,
    kl_gradients,
    kl_loss,
    soft_assign,
)
from grace.config import ContentKind, LayerLayout, TrainConfig, stream_rng
from grace.errors import InputError, NumericalError, ParameterError, StateError
from grace.nn.activations import Activation
from grace.nn.layers import DenseLayer, dropout_mask
from grace.nn.losses import bce_loss, mse_loss
from grace.propagation.operator import PropagationOperator, backprop_propagation, propagate

# Configure logging
logger = logging.getLogger(__name__)


def layer_widths(
    kappa: int,
    depth: int,
    embed_dim: int,
    layout: LayerLayout = LayerLayout.HALVING,
    hidden_width: Optional[int] = None
) -> List[int]:
    """
    Encoder widths from the content dimension down to the embedding

    Args:
        kappa: Content dimension
        depth: Number of encoder layers H
        embed_dim: Embedding width
        layout: "halving" (kappa -> kappa/2 -> ...) or "uniform" (all hidden layers equal)
        hidden_width: Hidden width of the uniform layout (default embed_dim)

    Returns:
        List[int]: depth + 1 widths, first kappa and last embed_dim
    """
    if depth < 1:
        raise ParameterError(f"Depth must be at least 1, got {depth}")
    if LayerLayout(layout) == LayerLayout.UNIFORM:
        hidden = [hidden_width or embed_dim] * (depth - 1)
    else:
        hidden = [max(1, kappa // 2 ** h) for h in range(1, depth)]
    return [kappa] + hidden + [embed_dim]


@dataclass
class ForwardResult:
    """Everything one forward pass produced; J2 is None when clustering is off or untargeted"""

    X: np.ndarray
    reconstruction: np.ndarray
    J1: float
    J: float
    recon_grad: np.ndarray
    masks: List[np.ndarray]
    X_tilde: Optional[np.ndarray] = None
    assignment: Optional[SoftAssignment] = None
    target: Optional[TargetDistribution] = None
    J2: Optional[float] = None
    clean_caches: Optional[List[Dict[str, np.ndarray]]] = None

    @property
    def Q(self) -> Optional[np.ndarray]:
        return None if self.assignment is None else self.assignment.Q


class GraceModel:
    """
    Encoder and mirrored decoder stacks plus cluster centers.

    Every layer applies dropout to its input during training. The clustering
    branch always reads an uncorrupted encoder pass, so Q during co-training
    is the Q that P and the final labels are computed from; dropout only
    corrupts the reconstruction path. Encoder layers and hidden decoder
    layers use ELU; the last decoder layer is linear and
    its output is read as logits (binary contents) or values (continuous).
    """

    def __init__(
        self,
        encoder: List[DenseLayer],
        decoder: List[DenseLayer],
        prop: PropagationOperator,
        content_kind: ContentKind = ContentKind.BINARY,
        lam: float = 0.1,
        dropout: float = 0.5,
        dropout_rng: Optional[np.random.Generator] = None,
        centers: Optional[Centers] = None
    ):
        if len(encoder) < 1 or len(encoder) != len(decoder):
            raise InputError(f"Encoder and decoder need the same depth >= 1, got {len(encoder)} and {len(decoder)}")
        if encoder[-1].fan_out != decoder[0].fan_in or decoder[-1].fan_out != encoder[0].fan_in:
            raise InputError("Decoder does not mirror the encoder widths")
        if lam < 0:
            raise ParameterError(f"lambda must be nonnegative, got {lam}")
        if not (0.0 <= dropout < 1.0):
            raise ParameterError(f"Dropout rate must lie in [0, 1), got {dropout}")
        self.encoder = encoder
        self.decoder = decoder
        self.prop = prop
        self.content_kind = ContentKind(content_kind)
        self.lam = lam
        self.dropout = dropout
        self.dropout_rng = dropout_rng if dropout_rng is not None else np.random.default_rng(0)
        self.centers = centers

    @classmethod
    def build(
        cls,
        kappa: int,
        config: TrainConfig,
        prop: PropagationOperator,
        content_kind: ContentKind = ContentKind.BINARY
    ) -> "GraceModel":
        """
        Freshly initialized model for contents of dimension kappa

        Args:
            kappa: Content dimension
            config: Training hyperparameters (depth, widths, dropout, lambda, seed)
            prop: Propagation operator of the graph
            content_kind: Binary (cross entropy) or continuous (squared error) contents

        Returns:
            GraceModel: Model with seeded initial weights and no centers yet
        """
        content_kind = ContentKind(content_kind)
        widths = layer_widths(
            kappa, config.depth, config.resolve_embed_dim(kappa), config.layer_layout, config.hidden_width
        )
        init_rng = stream_rng(config.seed, "init")
        encoder = [
            DenseLayer.initialize(widths[h], widths[h + 1], Activation.ELU, init_rng)
            for h in range(config.depth)
        ]
        mirrored = widths[::-1]
        decoder = [
            DenseLayer.initialize(
                mirrored[h],
                mirrored[h + 1],
                Activation.LINEAR if h == config.depth - 1 else Activation.ELU,
                init_rng,
            )
            for h in range(config.depth)
        ]
        logger.info(f"Built model with encoder widths {widths} ({content_kind.value} contents)")
        return cls(
            encoder,
            decoder,
            prop,
            content_kind=content_kind,
            lam=config.lam,
            dropout=config.dropout,
            dropout_rng=stream_rng(config.seed, "dropout"),
        )

    @property
    def kappa(self) -> int:
        return self.encoder[0].fan_in

    @property
    def embed_dim(self) -> int:
        return self.encoder[-1].fan_out

    @property
    def depth(self) -> int:
        return len(self.encoder)

    @property
    def layers(self) -> List[DenseLayer]:
        return self.encoder + self.decoder

    def layer_names(self) -> List[str]:
        return [f"encoder.{h}" for h in range(self.depth)] + [f"decoder.{h}" for h in range(self.depth)]

    def parameters(self, include_centers: bool = True) -> Dict[str, np.ndarray]:
        """Named references to the parameter arrays (updated in place by optimizers)"""
        params: Dict[str, np.ndarray] = OrderedDict()
        for name, layer in zip(self.layer_names(), self.layers):
            params[f"{name}.weight"] = layer.weight
            params[f"{name}.bias"] = layer.bias
        if include_centers and self.centers is not None:
            params["centers"] = self.centers.U
        return params

    def sample_masks(self, n: int, training: bool) -> List[np.ndarray]:
        """Fresh dropout masks for the inputs of every encoder and decoder layer"""
        return [
            dropout_mask((n, layer.fan_in), self.dropout, self.dropout_rng, training)
            for layer in self.layers
        ]

    def _check_contents(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[1] != self.kappa:
            raise InputError(f"Contents must have {self.kappa} columns, got shape {A.shape}")
        if A.shape[0] != self.prop.n:
            raise InputError(f"Contents have {A.shape[0]} rows but the graph has {self.prop.n} nodes")
        return A

    def encode(self, A: np.ndarray, masks: Optional[List[np.ndarray]] = None) -> np.ndarray:
        """Deep embedding X of the contents (masks: one per encoder layer, None for evaluation)"""
        out = np.asarray(A, dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != self.kappa:
            raise InputError(f"Contents must have {self.kappa} columns, got shape {out.shape}")
        for h, layer in enumerate(self.encoder):
            out = layer.forward(out, None if masks is None else masks[h])
        return out

    def decode(self, X: np.ndarray, masks: Optional[List[np.ndarray]] = None) -> np.ndarray:
        """Reconstruction logits/values of the contents"""
        out = np.asarray(X, dtype=np.float64)
        for h, layer in enumerate(self.decoder):
            out = layer.forward(out, None if masks is None else masks[h])
        return out

    def reconstruction_loss(self, A: np.ndarray, reconstruction: np.ndarray):
        if self.content_kind == ContentKind.BINARY:
            return bce_loss(A, reconstruction)
        return mse_loss(A, reconstruction)

    def forward(
        self,
        A: np.ndarray,
        training: bool = False,
        target: Optional[TargetDistribution] = None,
        with_clustering: bool = True,
        masks: Optional[List[np.ndarray]] = None
    ) -> ForwardResult:
        """
        One pass through the full model

        Args:
            A: n x kappa contents
            training: Sample dropout masks (unless masks are given)
            target: Fixed target distribution P; required for training with clustering
            with_clustering: Propagate and softly assign (off during pre-training)
            masks: Explicit dropout masks, 2H of them, e.g. frozen for gradient checks

        Returns:
            ForwardResult: X, X_tilde, reconstruction, Q and the losses J1, J2, J
        """
        A = self._check_contents(A)
        if with_clustering and self.centers is None:
            raise StateError("Cluster centers are not initialized")
        if training and with_clustering and target is None:
            raise StateError("Co-training requires a target distribution")
        if masks is None:
            masks = self.sample_masks(A.shape[0], training)
        elif len(masks) != 2 * self.depth:
            raise InputError(f"Expected {2 * self.depth} dropout masks, got {len(masks)}")

        clean, clean_caches = None, None
        if training and with_clustering:
            clean = self.encode(A)
            clean_caches = [layer.cache for layer in self.encoder]

        X = self.encode(A, masks[: self.depth])
        reconstruction = self.decode(X, masks[self.depth:])
        J1, recon_grad = self.reconstruction_loss(A, reconstruction)
        result = ForwardResult(
            X=X, reconstruction=reconstruction, J1=J1, J=J1, recon_grad=recon_grad, masks=masks,
            clean_caches=clean_caches,
        )
        if not with_clustering:
            return result

        result.X_tilde = propagate(self.prop, X if clean is None else clean)
        result.assignment = soft_assign(result.X_tilde, self.centers)
        if target is not None:
            result.target = target
            result.J2 = kl_loss(target.P, result.assignment.Q)
            result.J = J1 + self.lam * result.J2
        return result

    def backward(self, result: ForwardResult) -> Dict[str, np.ndarray]:
        """
        Gradients of result.J; must follow the forward pass that produced result

        Args:
            result: Output of the immediately preceding forward call

        Returns:
            Dict: Gradients keyed like parameters()
        """
        grads: Dict[str, np.ndarray] = OrderedDict()
        names = self.layer_names()
        upstream = result.recon_grad
        for h in reversed(range(self.depth)):
            layer_grads = self.decoder[h].backward(upstream)
            grads[f"{names[self.depth + h]}.weight"] = layer_grads.weight
            grads[f"{names[self.depth + h]}.bias"] = layer_grads.bias
            upstream = layer_grads.inputs

        clean_grads = None
        if result.target is not None:
            d_tilde, d_centers = kl_gradients(
                result.target.P, result.assignment.Q, result.X_tilde, self.centers.U
            )
            clustering = backprop_propagation(self.prop, self.lam * d_tilde)
            grads["centers"] = self.lam * d_centers
            if result.clean_caches is None:
                upstream = upstream + clustering
            elif self.lam > 0:
                clean_grads = self._encoder_backward(clustering, result.clean_caches)

        for name, grad in self._encoder_backward(upstream).items():
            grads[name] = grad if clean_grads is None else grad + clean_grads[name]
        return grads

    def _encoder_backward(
        self,
        upstream: np.ndarray,
        caches: Optional[List[Dict[str, np.ndarray]]] = None
    ) -> Dict[str, np.ndarray]:
        grads: Dict[str, np.ndarray] = OrderedDict()
        names = self.layer_names()
        for h in reversed(range(self.depth)):
            layer_grads = self.encoder[h].backward(upstream, None if caches is None else caches[h])
            grads[f"{names[h]}.weight"] = layer_grads.weight
            grads[f"{names[h]}.bias"] = layer_grads.bias
            upstream = layer_grads.inputs
        return grads

    def check_finite(self) -> None:
        for name, layer in zip(self.layer_names(), self.layers):
            layer.check_finite(name)
        if self.centers is not None and not np.all(np.isfinite(self.centers.U)):
            raise NumericalError("Non-finite cluster centers")

    def embed(self, A: np.ndarray) -> np.ndarray:
        """Evaluation-mode embedding X"""
        return self.encode(self._check_contents(A))

    def propagated_embedding(self, A: np.ndarray) -> np.ndarray:
        """Evaluation-mode propagated embedding X_tilde"""
        return propagate(self.prop, self.embed(A))
