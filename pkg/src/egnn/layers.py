"""Graph network layers with hand-written forward and backward passes.

Array conventions, used everywhere:

- vertex features   (B, N, F)    float64
- adjacency         (B, N, N, L) float64; a zero entry means "no edge"
- mask              (B, N)       bool, True on real (unpadded) vertices
- flat features     (B, D)       float64, after a fully connected readout

Graph filter coefficient tensors ``h`` are laid out (F_out, F_in, L + 1):
slot 0 multiplies the identity (self) term, slot 1 + l multiplies adjacency
channel l. Every layer keeps padded positions exactly zero on entry and
exit, and never adds a bias to a masked row.

Each layer caches what its backward pass needs during forward; parameter
gradients accumulate into ``Param.grad`` and are cleared with
``ParamStore.zero_grads`` (the optimizers do this at the start of a step).
"""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionError, FixedSizeError
from .tensorops import act_tanh_relu, act_tanh_relu_grad, softmax_columns


@dataclass(eq=False)
class Param:
    """A learnable tensor with a matching gradient slot."""

    value: np.ndarray
    grad: np.ndarray
    trainable: bool = True


class ParamStore:
    """Ordered, named collection of :class:`Param` entries."""

    def __init__(self):
        self._entries = OrderedDict()

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> Param:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name {name!r}")
        value = np.asarray(value, dtype=np.float64)
        p = Param(value=value, grad=np.zeros_like(value), trainable=trainable)
        self._entries[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def items(self):
        return self._entries.items()

    def zero_grads(self) -> None:
        for p in self._entries.values():
            p.grad[...] = 0.0

    def count(self, trainable_only: bool = True) -> int:
        return sum(
            p.value.size
            for p in self._entries.values()
            if p.trainable or not trainable_only
        )


@dataclass(eq=False)
class LayerIO:
    """Data flowing between layers; also reused as the gradient carrier."""

    vertex_features: Optional[np.ndarray] = None
    adjacency: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    flat: Optional[np.ndarray] = None

    @classmethod
    def from_batch(cls, batch) -> "LayerIO":
        return cls(
            vertex_features=batch.vertex_features,
            adjacency=batch.adjacency,
            mask=batch.mask,
        )


def glorot_uniform(rng, shape, fan_in: int, fan_out: int, scale: float = 1.0) -> np.ndarray:
    bound = scale * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base class: parameters plus a forward/backward pair."""

    kind = "layer"

    def __init__(self):
        self.params = ParamStore()
        self._cache = None

    def forward(self, io: LayerIO) -> LayerIO:
        raise NotImplementedError

    def backward(self, grad: LayerIO) -> LayerIO:
        raise NotImplementedError

    def param_count(self) -> int:
        return self.params.count()

    def kink_margin(self) -> Optional[float]:
        """Distance of the last forward's pre-activations from the nearest
        non-smooth point, or None for smooth layers. Used by gradient checks
        to resample configurations that sit on a kink."""
        return None


def _check_graph_io(io: LayerIO, where: str) -> None:
    if io.vertex_features is None or io.adjacency is None or io.mask is None:
        raise DimensionError(f"{where} expects graph-shaped input")
    v, a, m = io.vertex_features, io.adjacency, io.mask
    if v.ndim != 3 or a.ndim != 4 or m.ndim != 2:
        raise DimensionError(
            f"{where}: bad ranks V{v.shape} A{a.shape} mask{m.shape}"
        )
    if a.shape[:2] != (v.shape[0], v.shape[1]) or a.shape[1] != a.shape[2]:
        raise DimensionError(
            f"{where}: adjacency {a.shape} does not match vertices {v.shape}"
        )
    if m.shape != v.shape[:2]:
        raise DimensionError(f"{where}: mask {m.shape} does not match {v.shape[:2]}")


def _require_fixed_size(mask: np.ndarray, n_required: int, where: str) -> None:
    sizes = mask.sum(axis=1)
    bad = np.nonzero(sizes != n_required)[0]
    if mask.shape[1] != n_required or bad.size:
        b = int(bad[0]) if bad.size else 0
        raise FixedSizeError(
            f"{where} requires a fixed graph size of {n_required}; graph at "
            f"batch index {b} has {int(sizes[b])} vertices "
            f"(padded width {mask.shape[1]})"
        )


# ---------------------------------------------------------------------------
# graph filter core (shared by the vertex filter layer and GEP embeddings)
# ---------------------------------------------------------------------------

def _filter_core_forward(v, a, mask, h, b):
    """Linear graph filter: out[:, f'] = sum_f (h0 I + sum_l h_l A_l) V[:, f] + b.

    Returns (pre, cache). Bias is applied only on unmasked rows and padded
    rows are forced to exactly zero.
    """
    if h.shape[1] != v.shape[2] or h.shape[2] != a.shape[3] + 1:
        raise DimensionError(
            f"filter coefficients {h.shape} do not match V{v.shape} A{a.shape}"
        )
    propagated = np.einsum("bijl,bjf->bifl", a, v, optimize=True)
    pre = np.einsum("bnf,pf->bnp", v, h[:, :, 0], optimize=True)
    pre += np.einsum("bnfl,pfl->bnp", propagated, h[:, :, 1:], optimize=True)
    pre += b
    pre *= mask[:, :, None]
    return pre, (v, a, mask, h, propagated)


def _filter_core_backward(cache, g):
    """Gradients of the linear filter core given upstream ``g`` (B, N, F')."""
    v, a, mask, h, propagated = cache
    g = g * mask[:, :, None]
    db = np.einsum("bnp->p", g)
    dh = np.empty_like(h)
    dh[:, :, 0] = np.einsum("bnp,bnf->pf", g, v, optimize=True)
    dh[:, :, 1:] = np.einsum("bnp,bnfl->pfl", g, propagated, optimize=True)
    t = np.einsum("bip,pfl->bifl", g, h[:, :, 1:], optimize=True)
    dv = np.einsum("bnp,pf->bnf", g, h[:, :, 0], optimize=True)
    dv += np.einsum("bifl,bijl->bjf", t, a, optimize=True)
    da = np.einsum("bifl,bjf->bijl", t, v, optimize=True)
    return dv, da, dh, db


class VertexFilterLayer(Layer):
    """Graph convolution on vertex features: per output feature, an identity
    coefficient plus one learned coefficient per adjacency channel, then a
    bias and a ReLU. The adjacency passes through unchanged."""

    kind = "vertex_filter"

    def __init__(self, f_in: int, f_out: int, l_in: int, rng, init_scale: float = 1.0):
        super().__init__()
        self.f_in, self.f_out, self.l_in = f_in, f_out, l_in
        h = glorot_uniform(
            rng, (f_out, f_in, l_in + 1), fan_in=f_in * (l_in + 1), fan_out=f_out,
            scale=init_scale,
        )
        self.params.add("h", h)
        self.params.add("b", np.zeros(f_out))

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        pre, core = _filter_core_forward(
            io.vertex_features, io.adjacency, io.mask,
            self.params["h"].value, self.params["b"].value,
        )
        self._cache = (core, pre)
        return LayerIO(
            vertex_features=np.maximum(pre, 0.0),
            adjacency=io.adjacency,
            mask=io.mask,
        )

    def backward(self, grad: LayerIO) -> LayerIO:
        core, pre = self._cache
        g = grad.vertex_features * (pre > 0.0)
        dv, da, dh, db = _filter_core_backward(core, g)
        self.params["h"].grad += dh
        self.params["b"].grad += db
        if grad.adjacency is not None:  # pass-through path
            da = da + grad.adjacency
        return LayerIO(vertex_features=dv, adjacency=da, mask=core[2])

    def kink_margin(self):
        core, pre = self._cache
        mask = core[2]
        vals = np.abs(pre[mask])
        return float(vals.min()) if vals.size else None


class EdgeConvLayer(Layer):
    """Edge convolution: for every ordered vertex pair (i, j), stack the
    edge's channel vector with both endpoint feature rows, apply a learned
    linear map and tanh(relu(.)). Produces a new adjacency with l_out
    channels; vertex features pass through. Pairs touching a masked vertex
    output exactly zero; diagonal pairs are computed like any other."""

    kind = "edge_conv"

    def __init__(
        self,
        f_in: int,
        l_in: int,
        l_out: int,
        rng,
        use_bias: bool = False,
        existing_edges_only: bool = False,
    ):
        super().__init__()
        self.f_in, self.l_in, self.l_out = f_in, l_in, l_out
        self.existing_edges_only = existing_edges_only
        w = glorot_uniform(
            rng, (l_out, l_in + 2 * f_in), fan_in=l_in + 2 * f_in, fan_out=l_out
        )
        self.params.add("W", w)
        if use_bias:
            self.params.add("bias", np.zeros(l_out))

    def _split_weight(self):
        w = self.params["W"].value
        l, f = self.l_in, self.f_in
        return w[:, :l], w[:, l : l + f], w[:, l + f :]

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        v, a, mask = io.vertex_features, io.adjacency, io.mask
        if a.shape[3] != self.l_in or v.shape[2] != self.f_in:
            raise DimensionError(
                f"{self.kind}: built for F={self.f_in}, L={self.l_in}, "
                f"got V{v.shape} A{a.shape}"
            )
        w_edge, w_src, w_dst = self._split_weight()
        z = np.einsum("bijl,kl->bijk", a, w_edge, optimize=True)
        z += np.einsum("bif,kf->bik", v, w_src, optimize=True)[:, :, None, :]
        z += np.einsum("bjf,kf->bjk", v, w_dst, optimize=True)[:, None, :, :]
        if "bias" in self.params:
            z += self.params["bias"].value
        pair = mask[:, :, None] & mask[:, None, :]
        if self.existing_edges_only:
            pair = pair & np.any(a != 0.0, axis=3)
        z *= pair[..., None]
        self._cache = (v, a, mask, pair, z)
        return LayerIO(vertex_features=v, adjacency=act_tanh_relu(z), mask=mask)

    def backward(self, grad: LayerIO) -> LayerIO:
        v, a, mask, pair, z = self._cache
        g = grad.adjacency * act_tanh_relu_grad(z)
        w_edge, w_src, w_dst = self._split_weight()
        dw = self.params["W"].grad
        dw[:, : self.l_in] += np.einsum("bijk,bijl->kl", g, a, optimize=True)
        dw[:, self.l_in : self.l_in + self.f_in] += np.einsum(
            "bijk,bif->kf", g, v, optimize=True
        )
        dw[:, self.l_in + self.f_in :] += np.einsum(
            "bijk,bjf->kf", g, v, optimize=True
        )
        if "bias" in self.params:
            self.params["bias"].grad += np.einsum("bijk->k", g)
        da = np.einsum("bijk,kl->bijl", g, w_edge, optimize=True)
        dv = np.einsum("bijk,kf->bif", g, w_src, optimize=True)
        dv += np.einsum("bijk,kf->bjf", g, w_dst, optimize=True)
        if grad.vertex_features is not None:  # pass-through path
            dv = dv + grad.vertex_features
        return LayerIO(vertex_features=dv, adjacency=da, mask=mask)

    def kink_margin(self):
        v, a, mask, pair, z = self._cache
        vals = np.abs(z[pair])
        return float(vals.min()) if vals.size else None


def _softmax_columns_backward(s, ds):
    """Backward of the masked column softmax given its output ``s``."""
    t = np.sum(s * ds, axis=-2, keepdims=True)
    return s * (ds - t)


class GEPPoolLayer(Layer):
    """Graph embed pooling to a fixed number of output vertices.

    Each embedding matrix is the masked column softmax of a linear graph
    filter with n_out output columns. Variants differ in how the three
    embedding roles (left/right of the adjacency bilinear form, and the
    vertex projection) share parameters:

    - original: one embedding plays all three roles
    - sym:      left and right share one embedding, vertices get their own
    - asym:     three independent embeddings (optionally initialized with
                the adjacency pair equal)

    Output mask is all-true of length n_out.
    """

    kind = "gep_pool"
    _ROLES = {
        "original": ("emb", "emb", "emb"),
        "sym": ("adj", "adj", "vert"),
        "asym": ("emb1", "emb2", "emb3"),
    }

    def __init__(
        self,
        f_in: int,
        l_in: int,
        n_out: int,
        rng,
        variant: str = "original",
        symmetric_init: bool = False,
        embed_init_scale: float = 0.1,
    ):
        super().__init__()
        variant = variant.lower()
        if variant not in self._ROLES:
            raise ValueError(f"unknown GEP variant {variant!r}")
        self.f_in, self.l_in, self.n_out = f_in, l_in, n_out
        self.variant = variant
        for branch in dict.fromkeys(self._ROLES[variant]):
            h = glorot_uniform(
                rng, (n_out, f_in, l_in + 1), fan_in=f_in * (l_in + 1),
                fan_out=n_out, scale=embed_init_scale,
            )
            self.params.add(f"h_{branch}", h)
            self.params.add(f"b_{branch}", np.zeros(n_out))
        if symmetric_init and variant == "asym":
            self.params["h_emb2"].value[...] = self.params["h_emb1"].value
            self.params["b_emb2"].value[...] = self.params["b_emb1"].value

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        v, a, mask = io.vertex_features, io.adjacency, io.mask
        cores, embeds = {}, {}
        for branch in dict.fromkeys(self._ROLES[self.variant]):
            pre, core = _filter_core_forward(
                v, a, mask, self.params[f"h_{branch}"].value,
                self.params[f"b_{branch}"].value,
            )
            cores[branch] = core
            embeds[branch] = softmax_columns(pre, mask)
        r1, r2, r3 = self._ROLES[self.variant]
        s1, s2, s3 = embeds[r1], embeds[r2], embeds[r3]
        v_out = np.einsum("bnp,bnf->bpf", s3, v, optimize=True)
        a_out = np.einsum("bnp,bnml,bmq->bpql", s1, a, s2, optimize=True)
        self._cache = (v, a, mask, cores, embeds)
        out_mask = np.ones((v.shape[0], self.n_out), dtype=bool)
        return LayerIO(vertex_features=v_out, adjacency=a_out, mask=out_mask)

    def backward(self, grad: LayerIO) -> LayerIO:
        v, a, mask, cores, embeds = self._cache
        gv, ga = grad.vertex_features, grad.adjacency
        r1, r2, r3 = self._ROLES[self.variant]
        s1, s2, s3 = embeds[r1], embeds[r2], embeds[r3]

        dv = np.einsum("bnp,bpf->bnf", s3, gv, optimize=True)
        ds3 = np.einsum("bpf,bnf->bnp", gv, v, optimize=True)
        as2 = np.einsum("bnml,bmq->bnql", a, s2, optimize=True)
        ds1 = np.einsum("bnql,bpql->bnp", as2, ga, optimize=True)
        s1a = np.einsum("bnp,bnml->bpml", s1, a, optimize=True)
        ds2 = np.einsum("bpml,bpql->bmq", s1a, ga, optimize=True)
        t = np.einsum("bnp,bpql->bnql", s1, ga, optimize=True)
        da = np.einsum("bnql,bmq->bnml", t, s2, optimize=True)

        ds_by_branch = {}
        for role, ds in ((r1, ds1), (r2, ds2), (r3, ds3)):
            ds_by_branch[role] = ds_by_branch.get(role, 0.0) + ds
        for branch, ds in ds_by_branch.items():
            dpre = _softmax_columns_backward(embeds[branch], ds)
            dv_b, da_b, dh, db = _filter_core_backward(cores[branch], dpre)
            dv += dv_b
            da += da_b
            self.params[f"h_{branch}"].grad += dh
            self.params[f"b_{branch}"].grad += db
        return LayerIO(vertex_features=dv, adjacency=da, mask=mask)


class GLPPoolLayer(Layer):
    """Pooling through learned fixed-size weight matrices. The input graphs
    must all have exactly ``n_in`` vertices. Variants mirror GEP: original
    shares one matrix across the three roles, sym ties the adjacency pair,
    asym keeps all three free (optionally initialized with the pair equal)."""

    kind = "glp_pool"
    _ROLES = {
        "original": ("K", "K", "K"),
        "sym": ("K12", "K12", "K3"),
        "asym": ("K1", "K2", "K3"),
    }

    def __init__(
        self,
        n_in: int,
        n_out: int,
        rng,
        variant: str = "original",
        symmetric_init: bool = False,
    ):
        super().__init__()
        variant = variant.lower()
        if variant not in self._ROLES:
            raise ValueError(f"unknown GLP variant {variant!r}")
        self.n_in, self.n_out = n_in, n_out
        self.variant = variant
        for name in dict.fromkeys(self._ROLES[variant]):
            k = glorot_uniform(rng, (n_in, n_out), fan_in=n_in, fan_out=n_out)
            self.params.add(name, k)
        if symmetric_init and variant == "asym":
            self.params["K2"].value[...] = self.params["K1"].value

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        v, a, mask = io.vertex_features, io.adjacency, io.mask
        _require_fixed_size(mask, self.n_in, self.kind)
        r1, r2, r3 = self._ROLES[self.variant]
        k1 = self.params[r1].value
        k2 = self.params[r2].value
        k3 = self.params[r3].value
        a_out = np.einsum("np,bnml,mq->bpql", k1, a, k2, optimize=True)
        v_out = np.einsum("np,bnf->bpf", k3, v, optimize=True)
        self._cache = (v, a, mask)
        out_mask = np.ones((v.shape[0], self.n_out), dtype=bool)
        return LayerIO(vertex_features=v_out, adjacency=a_out, mask=out_mask)

    def backward(self, grad: LayerIO) -> LayerIO:
        v, a, mask = self._cache
        gv, ga = grad.vertex_features, grad.adjacency
        r1, r2, r3 = self._ROLES[self.variant]
        k1 = self.params[r1].value
        k2 = self.params[r2].value
        k3 = self.params[r3].value

        ak2 = np.einsum("bnml,mq->bnql", a, k2, optimize=True)
        self.params[r1].grad += np.einsum("bnql,bpql->np", ak2, ga, optimize=True)
        k1a = np.einsum("np,bnml->bpml", k1, a, optimize=True)
        self.params[r2].grad += np.einsum("bpml,bpql->mq", k1a, ga, optimize=True)
        self.params[r3].grad += np.einsum("bnf,bpf->np", v, gv, optimize=True)
        t = np.einsum("np,bpql->bnql", k1, ga, optimize=True)
        da = np.einsum("bnql,mq->bnml", t, k2, optimize=True)
        dv = np.einsum("np,bpf->bnf", k3, gv, optimize=True)
        return LayerIO(vertex_features=dv, adjacency=da, mask=mask)


# ---------------------------------------------------------------------------
# readout layers
# ---------------------------------------------------------------------------

def efc_flatten(v, a):
    """Per graph, concatenate the vertex matrix with the adjacency reshaped to
    (N, N*L) and flatten row-major. Element order per vertex row: the F
    vertex features, then the N adjacency blocks with the channel index
    varying fastest. This order is frozen; tests assert it."""
    b, n, f = v.shape
    l = a.shape[3]
    y = np.concatenate([v, a.reshape(b, n, n * l)], axis=2)
    return y.reshape(b, n * (f + n * l))


def efc_flatten_backward(g, n, f, l):
    """Split an upstream gradient back into vertex and adjacency blocks."""
    b = g.shape[0]
    y = g.reshape(b, n, f + n * l)
    dv = np.ascontiguousarray(y[:, :, :f])
    da = y[:, :, f:].reshape(b, n, n, l).copy()
    return dv, da


def _dense_forward(x, w, b):
    return x @ w.T + b


class EFCLayer(Layer):
    """Edge-aware fully connected layer: flattens [V | A] per graph, then an
    affine map with ReLU. Requires the fixed vertex count a pooling layer
    establishes."""

    kind = "efc"

    def __init__(self, n_in: int, f_in: int, l_in: int, n_features: int, rng,
                 relu: bool = True):
        super().__init__()
        self.n_in, self.f_in, self.l_in = n_in, f_in, l_in
        self.relu = relu
        width = n_in * f_in + n_in * n_in * l_in
        self.width = width
        self.params.add(
            "W", glorot_uniform(rng, (n_features, width), fan_in=width, fan_out=n_features)
        )
        self.params.add("b", np.zeros(n_features))

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        _require_fixed_size(io.mask, self.n_in, self.kind)
        x = efc_flatten(io.vertex_features, io.adjacency)
        pre = _dense_forward(x, self.params["W"].value, self.params["b"].value)
        self._cache = (x, pre, io.mask)
        return LayerIO(flat=np.maximum(pre, 0.0) if self.relu else pre)

    def backward(self, grad: LayerIO) -> LayerIO:
        x, pre, mask = self._cache
        g = grad.flat * (pre > 0.0) if self.relu else grad.flat
        self.params["W"].grad += g.T @ x
        self.params["b"].grad += g.sum(axis=0)
        dx = g @ self.params["W"].value
        dv, da = efc_flatten_backward(dx, self.n_in, self.f_in, self.l_in)
        return LayerIO(vertex_features=dv, adjacency=da, mask=mask)

    def kink_margin(self):
        if not self.relu:
            return None
        _, pre, _ = self._cache
        return float(np.abs(pre).min()) if pre.size else None


class FlattenVerticesLayer(Layer):
    """Row-major flatten of the vertex matrix alone (the adjacency is
    dropped). Requires a fixed vertex count."""

    kind = "flatten_vertices"

    def __init__(self, n_in: int, f_in: int):
        super().__init__()
        self.n_in, self.f_in = n_in, f_in

    def forward(self, io: LayerIO) -> LayerIO:
        _check_graph_io(io, self.kind)
        _require_fixed_size(io.mask, self.n_in, self.kind)
        self._cache = (io.adjacency.shape, io.mask)
        b = io.vertex_features.shape[0]
        return LayerIO(flat=io.vertex_features.reshape(b, self.n_in * self.f_in))

    def backward(self, grad: LayerIO) -> LayerIO:
        a_shape, mask = self._cache
        b = grad.flat.shape[0]
        dv = grad.flat.reshape(b, self.n_in, self.f_in).copy()
        return LayerIO(vertex_features=dv, adjacency=np.zeros(a_shape), mask=mask)


class DenseLayer(Layer):
    """Affine map on flat features with optional ReLU."""

    kind = "dense"

    def __init__(self, d_in: int, d_out: int, rng, relu: bool = True):
        super().__init__()
        self.d_in, self.d_out = d_in, d_out
        self.relu = relu
        self.params.add(
            "W", glorot_uniform(rng, (d_out, d_in), fan_in=d_in, fan_out=d_out)
        )
        self.params.add("b", np.zeros(d_out))

    def forward(self, io: LayerIO) -> LayerIO:
        x = io.flat
        if x is None or x.ndim != 2 or x.shape[1] != self.d_in:
            got = None if x is None else x.shape
            raise DimensionError(f"dense built for width {self.d_in}, got {got}")
        pre = _dense_forward(x, self.params["W"].value, self.params["b"].value)
        self._cache = (x, pre)
        return LayerIO(flat=np.maximum(pre, 0.0) if self.relu else pre)

    def backward(self, grad: LayerIO) -> LayerIO:
        x, pre = self._cache
        g = grad.flat * (pre > 0.0) if self.relu else grad.flat
        self.params["W"].grad += g.T @ x
        self.params["b"].grad += g.sum(axis=0)
        return LayerIO(flat=g @ self.params["W"].value)

    def kink_margin(self):
        if not self.relu:
            return None
        _, pre = self._cache
        return float(np.abs(pre).min()) if pre.size else None


# ---------------------------------------------------------------------------
# classification loss
# ---------------------------------------------------------------------------

def softmax_rows(logits):
    """Row-wise softmax of a (B, C) logit matrix."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross entropy of softmaxed logits against integer labels.

    Returns (loss, grad) where grad = (softmax - onehot) / B, the gradient of
    the mean loss with respect to the logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    b, c = logits.shape
    if labels.shape != (b,):
        raise DimensionError(f"labels {labels.shape} do not match logits {logits.shape}")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(b), labels]))
    grad = softmax_rows(logits)
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, grad
