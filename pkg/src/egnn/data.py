"""Graph containers, the TU text-format loader, the binary dataset cache,
zero-padded batching, and stratified k-fold splitting.

TU layout: a directory ``D`` holding ``NAME_A.txt`` (one "i, j" edge per
line, node ids 1-indexed over the whole dataset), ``NAME_graph_indicator.txt``
(line per node: its graph id) and ``NAME_graph_labels.txt`` (line per graph),
plus optional ``NAME_node_labels.txt`` / ``NAME_node_attributes.txt`` /
``NAME_edge_labels.txt`` / ``NAME_edge_attributes.txt`` aligned line-for-line
with the node numbering and with ``NAME_A.txt``.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError

_CACHE_MAGIC = b"EGNN"
_CACHE_VERSION = 1


@dataclass(frozen=True, eq=False)
class Graph:
    """One attributed graph: vertex features (N, F), adjacency (N, N, L),
    class label. A zero adjacency entry encodes edge absence in that channel."""

    vertex_features: np.ndarray
    adjacency: np.ndarray
    label: int

    @property
    def n(self) -> int:
        return self.vertex_features.shape[0]

    @property
    def num_features(self) -> int:
        return self.vertex_features.shape[1]

    @property
    def num_edge_channels(self) -> int:
        return self.adjacency.shape[2]


def validate_graph(g: Graph) -> Graph:
    """Check the Graph invariants; returns the graph for chaining."""
    v, a = g.vertex_features, g.adjacency
    if v.ndim != 2 or a.ndim != 3:
        raise ValueError(
            f"graph tensors must be (N,F) and (N,N,L), got {v.shape} and {a.shape}"
        )
    n = v.shape[0]
    if n < 1 or v.shape[1] < 1 or a.shape[2] < 1:
        raise ValueError(f"graph needs N,F,L >= 1, got N={n} F={v.shape[1]} L={a.shape[2]}")
    if a.shape[0] != n or a.shape[1] != n:
        raise ValueError(f"adjacency {a.shape} does not match vertex count {n}")
    if not (np.isfinite(v).all() and np.isfinite(a).all()):
        raise ValueError("graph tensors contain non-finite values")
    if g.label < 0:
        raise ValueError(f"label must be a non-negative class index, got {g.label}")
    return g


@dataclass(eq=False)
class Dataset:
    """A list of graphs sharing F and L, with a dense 0-based label range."""

    graphs: list
    num_classes: int
    name: str = "dataset"
    node_labels_onehot: bool = False
    edge_labels_onehot: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def num_vertex_features(self) -> int:
        return self.graphs[0].num_features

    @property
    def num_edge_channels(self) -> int:
        return self.graphs[0].num_edge_channels

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    def fixed_size(self):
        """The common vertex count if every graph has the same N, else None."""
        sizes = {g.n for g in self.graphs}
        return sizes.pop() if len(sizes) == 1 else None


@dataclass(eq=False)
class Batch:
    """Zero-padded stack of graphs. ``mask[b, i]`` is True iff vertex i is
    real in graph b; padded rows/columns are exactly zero."""

    vertex_features: np.ndarray  # (B, Nmax, F)
    adjacency: np.ndarray        # (B, Nmax, Nmax, L)
    mask: np.ndarray             # (B, Nmax) bool
    labels: np.ndarray           # (B,) int64

    def __len__(self) -> int:
        return self.vertex_features.shape[0]


# ---------------------------------------------------------------------------
# TU text format
# ---------------------------------------------------------------------------

def _read_lines(path: Path):
    """Yield (line_number, stripped_text) for non-blank lines."""
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text:
                yield lineno, text


def _parse_int(token: str, path: Path, lineno: int) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise DatasetFormatError(
            f"{path.name}:{lineno}: expected an integer, got {token.strip()!r}"
        ) from None


def _parse_floats(text: str, path: Path, lineno: int) -> list:
    out = []
    for token in text.split(","):
        try:
            out.append(float(token.strip()))
        except ValueError:
            raise DatasetFormatError(
                f"{path.name}:{lineno}: expected a number, got {token.strip()!r}"
            ) from None
    return out


def load_tu_dataset(directory, name: str, normalize_edge_channels: bool = False) -> Dataset:
    """Parse a TU-format dataset directory into a :class:`Dataset`.

    Vertex labels are one-hot encoded (attributes appended as real columns);
    edge labels become one-hot adjacency channels (attributes as real
    channels). With no edge file at all, L=1 with binary adjacency. Directed
    storage: edges are stored exactly as listed, never symmetrized.

    ``normalize_edge_channels`` min-max rescales each channel over the listed
    edges; absent edges stay exactly 0 (a listed edge sitting at the channel
    minimum also maps to 0, which is the caveat of min-max on sparse storage).
    """
    directory = Path(directory)
    paths = {
        key: directory / f"{name}_{key}.txt"
        for key in (
            "A",
            "graph_indicator",
            "graph_labels",
            "node_labels",
            "node_attributes",
            "edge_labels",
            "edge_attributes",
        )
    }
    for key in ("A", "graph_indicator", "graph_labels"):
        if not paths[key].is_file():
            raise DatasetFormatError(f"missing required file: {paths[key]}")

    # node -> graph membership (node ids are 1-indexed over the dataset)
    node_graph = [
        _parse_int(text, paths["graph_indicator"], lineno)
        for lineno, text in _read_lines(paths["graph_indicator"])
    ]
    num_nodes = len(node_graph)
    if num_nodes == 0:
        raise DatasetFormatError(f"{paths['graph_indicator'].name}: no nodes listed")

    graph_ids = sorted(set(node_graph))
    graph_index = {gid: i for i, gid in enumerate(graph_ids)}
    members = [[] for _ in graph_ids]
    for node_id, gid in enumerate(node_graph, start=1):
        members[graph_index[gid]].append(node_id)
    local_index = {}
    for rows in members:
        for local, node_id in enumerate(rows):
            local_index[node_id] = local

    raw_labels = [
        _parse_int(text, paths["graph_labels"], lineno)
        for lineno, text in _read_lines(paths["graph_labels"])
    ]
    if len(raw_labels) != len(graph_ids):
        raise DatasetFormatError(
            f"{paths['graph_labels'].name}: {len(raw_labels)} labels for "
            f"{len(graph_ids)} graphs"
        )
    label_map = {raw: dense for dense, raw in enumerate(sorted(set(raw_labels)))}
    labels = [label_map[raw] for raw in raw_labels]

    # edges
    edges = []  # (graph_idx, local_i, local_j)
    for lineno, text in _read_lines(paths["A"]):
        tokens = text.split(",")
        if len(tokens) != 2:
            raise DatasetFormatError(
                f"{paths['A'].name}:{lineno}: expected 'i, j', got {text!r}"
            )
        i = _parse_int(tokens[0], paths["A"], lineno)
        j = _parse_int(tokens[1], paths["A"], lineno)
        for node_id in (i, j):
            if not 1 <= node_id <= num_nodes:
                raise DatasetFormatError(
                    f"{paths['A'].name}:{lineno}: node id {node_id} outside 1..{num_nodes}"
                )
        gi, gj = node_graph[i - 1], node_graph[j - 1]
        if gi != gj:
            raise DatasetFormatError(
                f"{paths['A'].name}:{lineno}: edge ({i}, {j}) joins nodes of "
                f"different graphs {gi} and {gj}"
            )
        edges.append((graph_index[gi], local_index[i], local_index[j]))

    # vertex feature columns
    node_label_values = None
    node_onehot = {}
    if paths["node_labels"].is_file():
        node_label_values = [
            _parse_int(text, paths["node_labels"], lineno)
            for lineno, text in _read_lines(paths["node_labels"])
        ]
        if len(node_label_values) != num_nodes:
            raise DatasetFormatError(
                f"{paths['node_labels'].name}: {len(node_label_values)} lines for "
                f"{num_nodes} nodes"
            )
        node_onehot = {v: k for k, v in enumerate(sorted(set(node_label_values)))}
    node_attrs = None
    if paths["node_attributes"].is_file():
        rows = [
            _parse_floats(text, paths["node_attributes"], lineno)
            for lineno, text in _read_lines(paths["node_attributes"])
        ]
        if len(rows) != num_nodes:
            raise DatasetFormatError(
                f"{paths['node_attributes'].name}: {len(rows)} lines for {num_nodes} nodes"
            )
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise DatasetFormatError(
                f"{paths['node_attributes'].name}: inconsistent attribute widths {sorted(widths)}"
            )
        node_attrs = np.array(rows, dtype=np.float64)

    onehot_cols = len(node_onehot)
    attr_cols = 0 if node_attrs is None else node_attrs.shape[1]
    num_features = onehot_cols + attr_cols
    constant_feature = num_features == 0
    if constant_feature:
        num_features = 1  # no vertex information at all: constant 1.0 column

    # edge feature channels
    edge_label_values = None
    edge_onehot = {}
    if paths["edge_labels"].is_file():
        edge_label_values = [
            _parse_int(text, paths["edge_labels"], lineno)
            for lineno, text in _read_lines(paths["edge_labels"])
        ]
        if len(edge_label_values) != len(edges):
            raise DatasetFormatError(
                f"{paths['edge_labels'].name}: {len(edge_label_values)} lines for "
                f"{len(edges)} edges"
            )
        edge_onehot = {v: k for k, v in enumerate(sorted(set(edge_label_values)))}
    edge_attrs = None
    if paths["edge_attributes"].is_file():
        rows = [
            _parse_floats(text, paths["edge_attributes"], lineno)
            for lineno, text in _read_lines(paths["edge_attributes"])
        ]
        if len(rows) != len(edges):
            raise DatasetFormatError(
                f"{paths['edge_attributes'].name}: {len(rows)} lines for {len(edges)} edges"
            )
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise DatasetFormatError(
                f"{paths['edge_attributes'].name}: inconsistent attribute widths {sorted(widths)}"
            )
        edge_attrs = np.array(rows, dtype=np.float64) if rows else None

    onehot_channels = len(edge_onehot)
    attr_channels = 0 if edge_attrs is None else edge_attrs.shape[1]
    num_channels = onehot_channels + attr_channels
    binary_adjacency = num_channels == 0
    if binary_adjacency:
        num_channels = 1

    # per-edge channel vectors, in A.txt order
    edge_features = np.zeros((len(edges), num_channels), dtype=np.float64)
    if binary_adjacency:
        edge_features[:] = 1.0
    else:
        if edge_label_values is not None:
            for row, value in enumerate(edge_label_values):
                edge_features[row, edge_onehot[value]] = 1.0
        if edge_attrs is not None:
            edge_features[:, onehot_channels:] = edge_attrs

    if normalize_edge_channels and len(edges) > 0:
        lo = edge_features.min(axis=0)
        hi = edge_features.max(axis=0)
        span = hi - lo
        flat = span == 0
        span[flat] = 1.0
        edge_features = (edge_features - lo) / span
        edge_features[:, flat] = 1.0

    graphs = []
    for gidx, rows in enumerate(members):
        n = len(rows)
        v = np.zeros((n, num_features), dtype=np.float64)
        if constant_feature:
            v[:] = 1.0
        else:
            for local, node_id in enumerate(rows):
                if node_label_values is not None:
                    v[local, node_onehot[node_label_values[node_id - 1]]] = 1.0
                if node_attrs is not None:
                    v[local, onehot_cols:] = node_attrs[node_id - 1]
        a = np.zeros((n, n, num_channels), dtype=np.float64)
        graphs.append(Graph(vertex_features=v, adjacency=a, label=labels[gidx]))
    for row, (gidx, i, j) in enumerate(edges):
        graphs[gidx].adjacency[i, j, :] = edge_features[row]

    return Dataset(
        graphs=graphs,
        num_classes=len(label_map),
        name=name,
        node_labels_onehot=node_label_values is not None,
        edge_labels_onehot=edge_label_values is not None,
    )


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

def save_dataset_cache(ds: Dataset, path) -> None:
    """Write the canonical binary cache: versioned header, then per-graph
    records (n, F, L, label, row-major float64 payloads), little-endian."""
    path = Path(path)
    name_bytes = ds.name.encode("utf-8")
    with path.open("wb") as fh:
        fh.write(struct.pack("<4sI", _CACHE_MAGIC, _CACHE_VERSION))
        fh.write(struct.pack("<I", len(name_bytes)))
        fh.write(name_bytes)
        fh.write(
            struct.pack(
                "<IIBB",
                len(ds.graphs),
                ds.num_classes,
                int(ds.node_labels_onehot),
                int(ds.edge_labels_onehot),
            )
        )
        for g in ds.graphs:
            n, f = g.vertex_features.shape
            l = g.adjacency.shape[2]
            fh.write(struct.pack("<IIII", n, f, l, g.label))
            fh.write(np.ascontiguousarray(g.vertex_features, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(g.adjacency, dtype="<f8").tobytes())


def load_dataset_cache(path) -> Dataset:
    """Read a cache file written by :func:`save_dataset_cache`."""
    path = Path(path)
    data = path.read_bytes()

    def take(fmt, offset):
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise DatasetFormatError(f"{path.name}: truncated cache file")
        return struct.unpack_from(fmt, data, offset), offset + size

    (magic, version), off = take("<4sI", 0)
    if magic != _CACHE_MAGIC:
        raise DatasetFormatError(f"{path.name}: bad magic {magic!r}")
    if version != _CACHE_VERSION:
        raise DatasetFormatError(f"{path.name}: unsupported cache version {version}")
    (name_len,), off = take("<I", off)
    name = data[off : off + name_len].decode("utf-8")
    off += name_len
    (num_graphs, num_classes, nl_onehot, el_onehot), off = take("<IIBB", off)
    graphs = []
    for _ in range(num_graphs):
        (n, f, l, label), off = take("<IIII", off)
        v_size = n * f * 8
        a_size = n * n * l * 8
        if off + v_size + a_size > len(data):
            raise DatasetFormatError(f"{path.name}: truncated cache file")
        v = np.frombuffer(data, dtype="<f8", count=n * f, offset=off).reshape(n, f)
        off += v_size
        a = np.frombuffer(data, dtype="<f8", count=n * n * l, offset=off).reshape(n, n, l)
        off += a_size
        graphs.append(Graph(v.copy(), a.copy(), int(label)))
    return Dataset(
        graphs=graphs,
        num_classes=num_classes,
        name=name,
        node_labels_onehot=bool(nl_onehot),
        edge_labels_onehot=bool(el_onehot),
    )


# ---------------------------------------------------------------------------
# batching and splits
# ---------------------------------------------------------------------------

def batch_graphs(graphs) -> Batch:
    """Stack graphs into one zero-padded batch (Nmax = largest N present)."""
    if not graphs:
        raise ValueError("cannot batch zero graphs")
    b = len(graphs)
    nmax = max(g.n for g in graphs)
    f = graphs[0].num_features
    l = graphs[0].num_edge_channels
    v = np.zeros((b, nmax, f), dtype=np.float64)
    a = np.zeros((b, nmax, nmax, l), dtype=np.float64)
    mask = np.zeros((b, nmax), dtype=bool)
    labels = np.empty(b, dtype=np.int64)
    for k, g in enumerate(graphs):
        v[k, : g.n] = g.vertex_features
        a[k, : g.n, : g.n] = g.adjacency
        mask[k, : g.n] = True
        labels[k] = g.label
    return Batch(vertex_features=v, adjacency=a, mask=mask, labels=labels)


def make_batches(ds: Dataset, batch_size: int, shuffle_seed: int) -> list:
    """Deterministically shuffle and chunk into per-batch padded stacks."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = np.random.default_rng(shuffle_seed).permutation(len(ds.graphs))
    return [
        batch_graphs([ds.graphs[i] for i in order[start : start + batch_size]])
        for start in range(0, len(order), batch_size)
    ]


def kfold_split(ds: Dataset, k: int, fold: int, seed: int):
    """Stratified k-fold split, deterministic under ``seed``.

    Returns (train, test) Datasets. The k test folds partition the dataset.
    If any class has fewer than k members the split falls back to an
    unstratified one and both returned datasets carry
    ``meta["stratified"] = False``.
    """
    if not 2 <= k <= len(ds):
        raise ValueError(f"need 2 <= k <= {len(ds)}, got k={k}")
    if not 0 <= fold < k:
        raise ValueError(f"fold must be in [0, {k}), got {fold}")

    labels = ds.labels
    by_class = [np.nonzero(labels == c)[0] for c in sorted(set(labels.tolist()))]
    stratified = all(len(idx) >= k for idx in by_class)
    rng = np.random.default_rng(seed)
    groups = by_class if stratified else [np.arange(len(ds))]

    test_idx = []
    for idx in groups:
        perm = idx[rng.permutation(len(idx))]
        test_idx.extend(perm[fold::k].tolist())
    test_set = set(test_idx)

    def subset(indices, tag):
        return Dataset(
            graphs=[ds.graphs[i] for i in indices],
            num_classes=ds.num_classes,
            name=f"{ds.name}[{tag}]",
            node_labels_onehot=ds.node_labels_onehot,
            edge_labels_onehot=ds.edge_labels_onehot,
            meta={"k": k, "fold": fold, "stratified": stratified},
        )

    train = subset([i for i in range(len(ds)) if i not in test_set], f"train{fold}")
    test = subset(sorted(test_set), f"test{fold}")
    return train, test


def stratified_limit(ds: Dataset, limit: int, seed: int) -> Dataset:
    """Deterministic stratified subsample of at most ``limit`` graphs."""
    if limit >= len(ds):
        return ds
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    labels = ds.labels
    rng = np.random.default_rng(seed)
    picked = []
    classes = sorted(set(labels.tolist()))
    for c in classes:
        idx = np.nonzero(labels == c)[0]
        want = max(1, round(limit * len(idx) / len(ds)))
        perm = idx[rng.permutation(len(idx))]
        picked.extend(perm[:want].tolist())
    picked = sorted(picked[:limit])
    return Dataset(
        graphs=[ds.graphs[i] for i in picked],
        num_classes=ds.num_classes,
        name=f"{ds.name}[limit{limit}]",
        node_labels_onehot=ds.node_labels_onehot,
        edge_labels_onehot=ds.edge_labels_onehot,
        meta=dict(ds.meta),
    )
