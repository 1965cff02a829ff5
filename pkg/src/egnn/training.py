"""Optimizers, the training loop, evaluation, and the cross-validation driver.

Every run is deterministic under (config, seed): initialization, per-epoch
shuffles, and fold assignment all derive from the config seed through
``numpy.random.SeedSequence``. Reports serialize to JSON (config echo,
per-epoch arrays, per-fold accuracies, summary) and a flat per-epoch CSV;
wall-clock time is kept on the report object and printed, but stays out of
the JSON so identical runs produce identical bytes.
"""

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import Dataset, kfold_split, make_batches, stratified_limit
from .exceptions import DivergenceError
from .layers import softmax_cross_entropy
from .model import GraphModel
from .synthetic import edge_motif_dataset


def derived_seed(seed: int, *keys: int) -> int:
    """Stable child seed for (seed, keys); avoids correlated streams."""
    return int(np.random.SeedSequence((seed,) + keys).generate_state(1)[0])


@dataclass
class TrainConfig:
    """Everything a training run depends on; echoed into every report."""

    arch: str = "4F-4EF-P4-EFC80"
    dataset: str = "synthetic"
    dataset_dir: Optional[str] = None
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 50
    batch_size: int = 8
    seed: int = 0
    folds: int = 5
    limit: Optional[int] = None
    edge_conv_bias: bool = False
    existing_edges_only: bool = False
    normalize_edges: bool = False
    # early stop is OFF by default: a fixed epoch budget keeps runs and
    # reports reproducible
    early_stop_accuracy: Optional[float] = None

    def validate(self) -> None:
        for name in ("learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                     "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")
        if self.limit is not None and self.limit < 1:
            raise ValueError(f"limit must be >= 1, got {self.limit}")
        if self.early_stop_accuracy is not None and not 0 < self.early_stop_accuracy <= 1:
            raise ValueError(
                f"early_stop_accuracy must be in (0, 1], got {self.early_stop_accuracy}"
            )

    def echo(self) -> dict:
        return asdict(self)


class SGD:
    """Plain gradient descent over a parameter list."""

    def __init__(self, params, learning_rate: float):
        self.params = list(params)
        self.learning_rate = learning_rate

    def step(self) -> None:
        for p in self.params:
            if p.trainable:
                p.value -= self.learning_rate * p.grad


class Adam:
    """Adam with bias correction. Zero gradients leave parameters unchanged."""

    def __init__(self, params, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if not p.trainable:
                continue
            m *= b1
            m += (1.0 - b1) * p.grad
            v *= b2
            v += (1.0 - b2) * p.grad * p.grad
            p.value -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def make_optimizer(cfg: TrainConfig, params):
    if cfg.optimizer == "sgd":
        return SGD(params, cfg.learning_rate)
    return Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                cfg.adam_eps)


def train_one(model: GraphModel, train_data, cfg: TrainConfig) -> dict:
    """Optimize ``model`` on the training data and return the epoch history.

    ``train_data`` may be a Dataset (reshuffled every epoch, deterministic
    under the config seed) or a frozen list of Batch objects used as-is.
    Raises DivergenceError on a non-finite loss, naming epoch and batch.
    """
    cfg.validate()
    optimizer = make_optimizer(cfg, model.param_list())
    history = {"train_loss": [], "train_accuracy": [], "max_batch_loss": []}
    for epoch in range(cfg.epochs):
        if isinstance(train_data, Dataset):
            batches = make_batches(
                train_data, cfg.batch_size, derived_seed(cfg.seed, 1, epoch)
            )
        else:
            batches = train_data
        losses = []
        correct = 0
        total = 0
        for batch_idx, batch in enumerate(batches):
            loss, logits, dlogits = model.loss_and_grad(batch)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {batch_idx}"
                )
            model.zero_grad()
            model.backward(dlogits)
            optimizer.step()
            losses.append(loss)
            correct += int((logits.argmax(axis=1) == batch.labels).sum())
            total += len(batch)
        history["train_loss"].append(float(np.mean(losses)))
        history["max_batch_loss"].append(float(np.max(losses)))
        history["train_accuracy"].append(correct / total)
        if (
            cfg.early_stop_accuracy is not None
            and history["train_accuracy"][-1] >= cfg.early_stop_accuracy
        ):
            break
    return history


def evaluate(model: GraphModel, batches):
    """Accuracy and mean loss over a batch list. Argmax ties resolve to the
    lowest class index."""
    if not batches:
        raise ValueError("evaluate requires at least one batch")
    correct = 0
    total = 0
    loss_sum = 0.0
    for batch in batches:
        logits = model.forward(batch)
        loss, _ = softmax_cross_entropy(logits, batch.labels)
        loss_sum += loss * len(batch)
        correct += int((logits.argmax(axis=1) == batch.labels).sum())
        total += len(batch)
    return correct / total, loss_sum / total


@dataclass
class RunReport:
    """Cross-validation outcome: per-fold accuracies, per-epoch histories,
    the aggregate mean/std, the parameter count, and the wall clock."""

    config: dict
    fold_accuracies: list
    fold_losses: list
    histories: list
    mean_accuracy: float
    std_accuracy: float
    parameter_count: int
    wall_clock_sec: float = 0.0
    notes: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        # wall clock intentionally excluded: reports must be byte-identical
        # across reruns of the same seeded config
        return {
            "config": self.config,
            "per_epoch": {
                "train_loss": [h["train_loss"] for h in self.histories],
                "train_accuracy": [h["train_accuracy"] for h in self.histories],
                "max_batch_loss": [h["max_batch_loss"] for h in self.histories],
            },
            "per_fold_accuracy": self.fold_accuracies,
            "per_fold_loss": self.fold_losses,
            "summary": {
                "mean_accuracy": self.mean_accuracy,
                "std_accuracy": self.std_accuracy,
                "parameter_count": self.parameter_count,
                "folds": len(self.fold_accuracies),
                **self.notes,
            },
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n").encode()

    def write_json(self, path) -> None:
        Path(path).write_bytes(self.to_json_bytes())

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["fold", "epoch", "train_loss", "train_accuracy", "max_batch_loss"]
            )
            for fold, h in enumerate(self.histories):
                for epoch in range(len(h["train_loss"])):
                    writer.writerow(
                        [
                            fold,
                            epoch,
                            repr(h["train_loss"][epoch]),
                            repr(h["train_accuracy"][epoch]),
                            repr(h["max_batch_loss"][epoch]),
                        ]
                    )


def load_config_dataset(cfg: TrainConfig) -> Dataset:
    """Resolve the dataset a config names: the built-in synthetic set or a
    TU-format directory."""
    if cfg.dataset == "synthetic":
        ds = edge_motif_dataset(seed=derived_seed(cfg.seed, 2))
    else:
        from .data import load_tu_dataset

        if not cfg.dataset_dir:
            raise ValueError("dataset_dir is required for TU datasets")
        ds = load_tu_dataset(
            cfg.dataset_dir, cfg.dataset,
            normalize_edge_channels=cfg.normalize_edges,
        )
    if cfg.limit is not None:
        ds = stratified_limit(ds, cfg.limit, derived_seed(cfg.seed, 3))
    return ds


def build_model(cfg: TrainConfig, ds: Dataset, seed: int) -> GraphModel:
    return GraphModel(
        cfg.arch,
        num_vertex_features=ds.num_vertex_features,
        num_edge_channels=ds.num_edge_channels,
        num_classes=ds.num_classes,
        seed=seed,
        fixed_n=ds.fixed_size(),
        edge_conv_bias=cfg.edge_conv_bias,
        existing_edges_only=cfg.existing_edges_only,
    )


def cross_validate(cfg: TrainConfig, dataset: Optional[Dataset] = None) -> RunReport:
    """Run k-fold cross-validation with fresh initialization per fold."""
    cfg.validate()
    if cfg.folds < 2:
        raise ValueError(f"cross-validation needs folds >= 2, got {cfg.folds}")
    ds = load_config_dataset(cfg) if dataset is None else dataset
    start = time.perf_counter()
    accuracies, losses, histories = [], [], []
    parameter_count = 0
    notes = {}
    for fold in range(cfg.folds):
        train_ds, test_ds = kfold_split(ds, cfg.folds, fold, cfg.seed)
        if not train_ds.meta.get("stratified", True):
            notes["stratified"] = False
        model = build_model(cfg, ds, seed=derived_seed(cfg.seed, 4, fold))
        parameter_count = model.count_parameters()
        history = train_one(model, train_ds, cfg)
        test_batches = make_batches(test_ds, cfg.batch_size, shuffle_seed=0)
        acc, loss = evaluate(model, test_batches)
        accuracies.append(acc)
        losses.append(loss)
        histories.append(history)
    return RunReport(
        config=cfg.echo(),
        fold_accuracies=accuracies,
        fold_losses=losses,
        histories=histories,
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        parameter_count=parameter_count,
        wall_clock_sec=time.perf_counter() - start,
        notes=notes,
    )
