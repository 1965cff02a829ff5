"""Gradient verification: every layer's analytic backward pass against the
central finite-difference oracle.

For each layer type the suite draws random configurations (shapes, weights,
inputs, including zero-padded vertices where the layer supports masking),
scores the layer output against a fixed random projection, and compares
every parameter and input gradient against ``finite_difference_grad``.
Configurations whose pre-activations sit within 1e-3 of a ReLU kink are
resampled; central differences are meaningless across a kink.
"""

from dataclasses import dataclass

import numpy as np

from .layers import (
    DenseLayer,
    EdgeConvLayer,
    EFCLayer,
    GEPPoolLayer,
    GLPPoolLayer,
    LayerIO,
    VertexFilterLayer,
    softmax_cross_entropy,
)
from .tensorops import finite_difference_grad

LAYER_TYPES = (
    "vertex_filter",
    "edge_conv",
    "gep_original",
    "gep_sym",
    "gep_asym",
    "glp_original",
    "glp_sym",
    "glp_asym",
    "efc",
    "dense",
    "loss",
)

_KINK_MARGIN = 1e-3
_TINY = 1e-8  # elements with |analytic| and |numeric| both below are exempt


def max_relative_error(analytic, numeric, tiny: float = _TINY) -> float:
    """Largest elementwise relative error, exempting jointly-tiny entries."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    keep = denom >= tiny
    if not keep.any():
        return 0.0
    return float((np.abs(analytic - numeric)[keep] / denom[keep]).max())


def _random_graph_io(rng, batch, nmax, f, l, pad: bool):
    """Random padded batch; per-graph sizes vary when ``pad`` is set."""
    if pad and nmax > 2:
        sizes = rng.integers(2, nmax + 1, size=batch)
        sizes[0] = nmax  # keep at least one full-width graph
    else:
        sizes = np.full(batch, nmax)
    v = rng.uniform(-1.0, 1.0, size=(batch, nmax, f))
    a = rng.uniform(-1.0, 1.0, size=(batch, nmax, nmax, l))
    mask = np.zeros((batch, nmax), dtype=bool)
    for b, n in enumerate(sizes):
        mask[b, :n] = True
        v[b, n:] = 0.0
        a[b, n:, :] = 0.0
        a[b, :, n:] = 0.0
    return LayerIO(vertex_features=v, adjacency=a, mask=mask)


def _build(kind: str, rng, config_index: int):
    """Instantiate one random configuration of the given layer type."""
    if kind == "loss":
        b = int(rng.integers(2, 7))
        c = int(rng.integers(2, 5))
        logits = rng.uniform(-2.0, 2.0, size=(b, c))
        labels = rng.integers(0, c, size=b)
        return {"kind": kind, "logits": logits, "labels": labels}

    if kind == "dense":
        d_in = int(rng.integers(2, 7))
        d_out = int(rng.integers(1, 5))
        layer = DenseLayer(d_in, d_out, rng, relu=config_index % 2 == 0)
        io = LayerIO(flat=rng.uniform(-1.0, 1.0, size=(int(rng.integers(1, 4)), d_in)))
        return {"kind": kind, "layer": layer, "io": io, "inputs": ["flat"]}

    batch = int(rng.integers(1, 3))
    n = int(rng.integers(2, 7))
    f = int(rng.integers(1, 4))
    l = int(rng.integers(1, 4))
    pad = config_index % 2 == 1

    if kind == "vertex_filter":
        layer = VertexFilterLayer(f, int(rng.integers(1, 4)), l, rng)
        io = _random_graph_io(rng, batch, n, f, l, pad)
    elif kind == "edge_conv":
        layer = EdgeConvLayer(
            f, l, int(rng.integers(1, 4)), rng, use_bias=config_index % 2 == 0
        )
        io = _random_graph_io(rng, batch, n, f, l, pad)
    elif kind.startswith("gep_"):
        layer = GEPPoolLayer(f, l, int(rng.integers(1, 4)), rng,
                             variant=kind.split("_", 1)[1])
        io = _random_graph_io(rng, batch, n, f, l, pad)
    elif kind.startswith("glp_"):
        layer = GLPPoolLayer(n, int(rng.integers(1, 4)), rng,
                             variant=kind.split("_", 1)[1])
        io = _random_graph_io(rng, batch, n, f, l, pad=False)
    elif kind == "efc":
        layer = EFCLayer(n, f, l, int(rng.integers(2, 7)), rng,
                         relu=config_index % 2 == 0)
        io = _random_graph_io(rng, batch, n, f, l, pad=False)
    else:
        raise ValueError(f"unknown layer type {kind!r}")
    return {
        "kind": kind,
        "layer": layer,
        "io": io,
        "inputs": ["vertex_features", "adjacency"],
    }


def _project(out: LayerIO, weights: dict) -> float:
    s = 0.0
    for name, r in weights.items():
        s += float(np.sum(getattr(out, name) * r))
    return s


def _check_config(cfg, rng) -> float:
    """Max relative error between analytic and numeric gradients for one
    built configuration. Returns inf when the configuration must be
    resampled (pre-activation on a kink)."""
    if cfg["kind"] == "loss":
        logits, labels = cfg["logits"], cfg["labels"]
        _, analytic = softmax_cross_entropy(logits, labels)
        numeric = finite_difference_grad(
            lambda x: softmax_cross_entropy(x, labels)[0], logits
        )
        return max_relative_error(analytic, numeric)

    layer, io = cfg["layer"], cfg["io"]
    out = layer.forward(io)
    margin = layer.kink_margin()
    if margin is not None and margin < _KINK_MARGIN:
        return np.inf

    weights = {}
    for name in ("vertex_features", "adjacency", "flat"):
        value = getattr(out, name)
        if value is not None:
            weights[name] = rng.uniform(-1.0, 1.0, size=value.shape)

    layer.params.zero_grads()
    upstream = LayerIO(**weights)
    input_grads = layer.backward(upstream)

    def score() -> float:
        return _project(layer.forward(io), weights)

    worst = 0.0
    for name, p in layer.params.items():
        analytic = p.grad.copy()
        original = p.value

        def eval_param(x):
            p.value = x
            return score()

        numeric = finite_difference_grad(eval_param, original)
        p.value = original
        worst = max(worst, max_relative_error(analytic, numeric))

    for name in cfg["inputs"]:
        analytic = getattr(input_grads, name).copy()
        base = getattr(io, name)

        def eval_input(x):
            fields = {
                "vertex_features": io.vertex_features,
                "adjacency": io.adjacency,
                "mask": io.mask,
                "flat": io.flat,
            }
            fields[name] = x
            return _project(layer.forward(LayerIO(**fields)), weights)

        numeric = finite_difference_grad(eval_input, base)
        worst = max(worst, max_relative_error(analytic, numeric))

    layer.forward(io)  # leave the cache consistent with the unperturbed input
    return worst


@dataclass
class LayerCheck:
    kind: str
    max_rel_error: float
    tolerance: float
    n_configs: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def check_layer_type(kind: str, seed: int = 0, n_configs: int = 20) -> LayerCheck:
    """Verify one layer type over ``n_configs`` random configurations."""
    tolerance = 1e-6 if kind == "loss" else 1e-4
    type_index = LAYER_TYPES.index(kind)
    worst = 0.0
    for config_index in range(n_configs):
        err = np.inf
        for attempt in range(64):
            rng = np.random.default_rng(
                np.random.SeedSequence((seed, type_index, config_index, attempt))
            )
            cfg = _build(kind, rng, config_index)
            err = _check_config(cfg, rng)
            if np.isfinite(err):
                break
        if not np.isfinite(err):
            raise RuntimeError(
                f"could not draw a kink-free configuration for {kind} "
                f"(config {config_index})"
            )
        worst = max(worst, err)
    return LayerCheck(kind, worst, tolerance, n_configs)


def run_suite(seed: int = 0, n_configs: int = 20, kinds=LAYER_TYPES):
    """Run the whole verification suite; returns one LayerCheck per type."""
    return [check_layer_type(kind, seed=seed, n_configs=n_configs) for kind in kinds]
