"""Scikit-learn style front end for the graph classifier.

``EdgeGraphClassifier`` follows the estimator contract (all constructor
arguments stored verbatim, work happens in ``fit``, fitted state carries a
trailing underscore) so it composes with ``clone``, grid search, and the
usual scoring helpers. ``X`` is a sequence of :class:`egnn.data.Graph`
objects or ``(vertex_features, adjacency)`` array pairs.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import Dataset, Graph, batch_graphs, validate_graph
from .layers import softmax_rows
from .model import GraphModel
from .training import TrainConfig, derived_seed, train_one


def as_graph_list(X, y=None):
    """Validation helper: coerce estimator input to a list of Graphs.

    Accepts Graph instances or (V, A) pairs; ``y`` supplies labels for the
    pair form (Graph labels are kept when ``y`` is None).
    """
    graphs = []
    for idx, item in enumerate(X):
        if isinstance(item, Graph):
            g = item
        else:
            try:
                v, a = item
            except (TypeError, ValueError):
                raise TypeError(
                    f"X[{idx}] is neither a Graph nor a (V, A) pair: {type(item)!r}"
                ) from None
            g = Graph(
                vertex_features=np.asarray(v, dtype=np.float64),
                adjacency=np.asarray(a, dtype=np.float64),
                label=0 if y is None else int(y[idx]),
            )
        if y is not None:
            g = Graph(g.vertex_features, g.adjacency, int(y[idx]))
        graphs.append(validate_graph(g))
    if not graphs:
        raise ValueError("X is empty")
    f = {g.num_features for g in graphs}
    l = {g.num_edge_channels for g in graphs}
    if len(f) > 1 or len(l) > 1:
        raise ValueError(
            f"graphs disagree on feature dimensions: F in {sorted(f)}, L in {sorted(l)}"
        )
    return graphs


class EdgeGraphClassifier(BaseEstimator, ClassifierMixin):
    """Graph classifier over edge-attributed graphs.

    Parameters mirror :class:`egnn.training.TrainConfig`; the default
    architecture applies a graph filter, an edge convolution, embed pooling
    to four vertices, and an edge-aware fully connected readout.
    """

    def __init__(
        self,
        architecture: str = "4F-4EF-P4-EFC80",
        epochs: int = 100,
        batch_size: int = 8,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        seed: int = 0,
        edge_conv_bias: bool = False,
        existing_edges_only: bool = False,
    ):
        self.architecture = architecture
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.seed = seed
        self.edge_conv_bias = edge_conv_bias
        self.existing_edges_only = existing_edges_only

    def _config(self) -> TrainConfig:
        return TrainConfig(
            arch=self.architecture,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            seed=self.seed,
            edge_conv_bias=self.edge_conv_bias,
            existing_edges_only=self.existing_edges_only,
        )

    def fit(self, X, y=None):
        X = list(X)
        if y is None:
            for idx, item in enumerate(X):
                if not isinstance(item, Graph):
                    raise ValueError(
                        f"y is required when X items are not Graphs (X[{idx}])"
                    )
            y = np.array([g.label for g in X])
        else:
            y = np.asarray(y)
            if len(y) != len(X):
                raise ValueError(f"X has {len(X)} graphs but y has {len(y)} labels")
        self.classes_, dense = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("fit needs at least two classes")
        graphs = as_graph_list(X, dense)
        ds = Dataset(graphs=graphs, num_classes=len(self.classes_), name="fit")
        cfg = self._config()
        cfg.validate()
        self.model_ = GraphModel(
            cfg.arch,
            num_vertex_features=ds.num_vertex_features,
            num_edge_channels=ds.num_edge_channels,
            num_classes=ds.num_classes,
            seed=derived_seed(cfg.seed, 0),
            fixed_n=ds.fixed_size(),
            edge_conv_bias=cfg.edge_conv_bias,
            existing_edges_only=cfg.existing_edges_only,
        )
        self.history_ = train_one(self.model_, ds, cfg)
        self.n_parameters_ = self.model_.count_parameters()
        return self

    def _logits(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise RuntimeError("this EdgeGraphClassifier is not fitted yet")
        graphs = as_graph_list(X)
        logits = []
        for start in range(0, len(graphs), self.batch_size):
            batch = batch_graphs(graphs[start : start + self.batch_size])
            logits.append(self.model_.forward(batch))
        return np.concatenate(logits, axis=0)

    def predict_proba(self, X) -> np.ndarray:
        return softmax_rows(self._logits(X))

    def predict(self, X) -> np.ndarray:
        logits = self._logits(X)
        return self.classes_[logits.argmax(axis=1)]
