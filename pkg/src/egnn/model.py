"""Assemble a layer stack from an architecture spec and drive it end to end.

The model appends an implicit linear classification head mapping the last
layer's features to the class logits. Architectures that end graph-shaped
get a flattened-vertex readout before the head, which therefore requires a
fixed vertex count (a pooling layer, or a fixed-size dataset).
"""

from typing import Optional, Union

import numpy as np

from .arch import Architecture, parse_architecture
from .data import Batch
from .exceptions import ArchitectureError
from .layers import (
    DenseLayer,
    EdgeConvLayer,
    EFCLayer,
    FlattenVerticesLayer,
    GEPPoolLayer,
    GLPPoolLayer,
    LayerIO,
    VertexFilterLayer,
    softmax_cross_entropy,
)


class GraphModel:
    """A trained or trainable stack of graph layers plus the class head."""

    def __init__(
        self,
        architecture: Union[str, Architecture],
        num_vertex_features: int,
        num_edge_channels: int,
        num_classes: int,
        seed: int = 0,
        fixed_n: Optional[int] = None,
        edge_conv_bias: bool = False,
        existing_edges_only: bool = False,
    ):
        if isinstance(architecture, str):
            architecture = parse_architecture(architecture)
        if num_classes < 2:
            raise ArchitectureError(f"need at least 2 classes, got {num_classes}")
        self.architecture = architecture
        self.num_classes = num_classes
        self.num_vertex_features = num_vertex_features
        self.num_edge_channels = num_edge_channels
        self.seed = seed

        stages = architecture.shape_flow(
            num_vertex_features, num_edge_channels, n0=fixed_n
        )
        rng = np.random.default_rng(seed)
        layers = []
        token_slices = []  # layer-list span of each architecture token
        for spec, stage_in in zip(architecture.layers, stages[:-1]):
            token_start = len(layers)
            if spec.kind == "vertex_filter":
                layers.append(
                    VertexFilterLayer(stage_in.f, spec.n, stage_in.l, rng)
                )
            elif spec.kind == "edge_conv":
                layers.append(
                    EdgeConvLayer(
                        stage_in.f, stage_in.l, spec.n, rng,
                        use_bias=edge_conv_bias,
                        existing_edges_only=existing_edges_only,
                    )
                )
            elif spec.kind == "pool":
                variant = spec.variant
                sym_init = variant == "asym_sym_init"
                if sym_init:
                    variant = "asym"
                if spec.method == "gep":
                    layers.append(
                        GEPPoolLayer(
                            stage_in.f, stage_in.l, spec.n, rng,
                            variant=variant, symmetric_init=sym_init,
                        )
                    )
                else:
                    layers.append(
                        GLPPoolLayer(
                            stage_in.n, spec.n, rng,
                            variant=variant, symmetric_init=sym_init,
                        )
                    )
            elif spec.kind == "efc":
                layers.append(
                    EFCLayer(stage_in.n, stage_in.f, stage_in.l, spec.n, rng)
                )
            elif spec.kind == "fc":
                if stage_in.is_flat:
                    layers.append(DenseLayer(stage_in.width, spec.n, rng))
                else:
                    layers.append(FlattenVerticesLayer(stage_in.n, stage_in.f))
                    layers.append(
                        DenseLayer(stage_in.n * stage_in.f, spec.n, rng)
                    )
            token_slices.append((token_start, len(layers)))
        final = stages[-1]
        head_start = len(layers)
        if final.is_flat:
            head_in = final.width
        else:
            if final.n is None:
                raise ArchitectureError(
                    "architecture ends with a variable graph size; add a "
                    "pooling or fully connected layer before the class head"
                )
            layers.append(FlattenVerticesLayer(final.n, final.f))
            head_in = final.n * final.f
        layers.append(DenseLayer(head_in, num_classes, rng, relu=False))
        self.layers = layers
        self.stages = stages
        self.token_slices = token_slices
        self.head_slice = (head_start, len(layers))

    # -- parameter access ---------------------------------------------------

    def parameters(self):
        """Yield (qualified_name, Param) over every layer in order."""
        for idx, layer in enumerate(self.layers):
            for name, p in layer.params.items():
                yield f"layer{idx}.{layer.kind}.{name}", p

    def param_list(self):
        return [p for _, p in self.parameters()]

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.params.zero_grads()

    def count_parameters(self) -> int:
        return sum(p.value.size for p in self.param_list() if p.trainable)

    # -- execution ------------------------------------------------------------

    def forward(self, batch: Union[Batch, LayerIO]) -> np.ndarray:
        io = LayerIO.from_batch(batch) if isinstance(batch, Batch) else batch
        for layer in self.layers:
            io = layer.forward(io)
        return io.flat

    def backward(self, dlogits: np.ndarray) -> LayerIO:
        grad = LayerIO(flat=dlogits)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def loss_and_grad(self, batch: Batch):
        """Forward + loss; returns (loss, logits, dlogits). Callers run
        ``zero_grad`` and ``backward`` themselves when training."""
        logits = self.forward(batch)
        loss, dlogits = softmax_cross_entropy(logits, batch.labels)
        return loss, logits, dlogits

    def predict_logits(self, batches) -> np.ndarray:
        return np.concatenate([self.forward(b) for b in batches], axis=0)


def count_parameters(model: GraphModel) -> int:
    """Total number of trainable scalar parameters in the model."""
    return model.count_parameters()
