"""egnn: edge-aware graph convolutional networks built from scratch.

Graph filters on vertex features, an explicit edge-feature convolution,
learnable graph pooling in symmetric and asymmetric flavors, edge-aware
fully connected readouts, hand-written backprop verified against finite
differences, a TU-format dataset loader, and a cross-validation training
CLI (``egnn``).
"""

from .arch import Architecture, LayerSpec, parse_architecture
from .data import (
    Batch,
    Dataset,
    Graph,
    batch_graphs,
    kfold_split,
    load_dataset_cache,
    load_tu_dataset,
    make_batches,
    save_dataset_cache,
    validate_graph,
)
from .estimator import EdgeGraphClassifier, as_graph_list
from .gradcheck import check_layer_type, run_suite
from .layers import LayerIO, Param, ParamStore, softmax_cross_entropy
from .model import GraphModel, count_parameters
from .synthetic import edge_motif_dataset
from .tensorops import (
    act_relu,
    act_tanh_relu,
    finite_difference_grad,
    matmul,
    softmax_columns,
)
from .training import (
    Adam,
    RunReport,
    SGD,
    TrainConfig,
    cross_validate,
    evaluate,
    train_one,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Architecture",
    "Batch",
    "Dataset",
    "EdgeGraphClassifier",
    "Graph",
    "GraphModel",
    "LayerIO",
    "LayerSpec",
    "Param",
    "ParamStore",
    "RunReport",
    "SGD",
    "TrainConfig",
    "act_relu",
    "act_tanh_relu",
    "as_graph_list",
    "batch_graphs",
    "check_layer_type",
    "count_parameters",
    "cross_validate",
    "edge_motif_dataset",
    "evaluate",
    "finite_difference_grad",
    "kfold_split",
    "load_dataset_cache",
    "load_tu_dataset",
    "make_batches",
    "matmul",
    "parse_architecture",
    "run_suite",
    "save_dataset_cache",
    "softmax_columns",
    "softmax_cross_entropy",
    "train_one",
    "validate_graph",
    "__version__",
]
