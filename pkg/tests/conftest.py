"""Shared helpers: TU fixture writers, random graph builders, error metrics."""

import numpy as np
import pytest

from egnn.layers import LayerIO


def write_tu_files(directory, name, a_lines, indicator, graph_labels,
                   node_labels=None, node_attributes=None,
                   edge_labels=None, edge_attributes=None):
    """Write a TU-format dataset fixture into ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}_A.txt").write_text("\n".join(a_lines) + ("\n" if a_lines else ""))
    (directory / f"{name}_graph_indicator.txt").write_text("\n".join(map(str, indicator)) + "\n")
    (directory / f"{name}_graph_labels.txt").write_text("\n".join(map(str, graph_labels)) + "\n")
    optional = {
        "node_labels": node_labels,
        "node_attributes": node_attributes,
        "edge_labels": edge_labels,
        "edge_attributes": edge_attributes,
    }
    for key, rows in optional.items():
        if rows is not None:
            (directory / f"{name}_{key}.txt").write_text("\n".join(map(str, rows)) + "\n")
    return directory


def rel_err(analytic, numeric, tiny=1e-8):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    keep = denom >= tiny
    if not keep.any():
        return 0.0
    return float((np.abs(analytic - numeric)[keep] / denom[keep]).max())


def random_graph_io(rng, n, f, l, batch=1, pad=0):
    """Single-size random batch with ``pad`` extra zeroed vertices."""
    total = n + pad
    v = np.zeros((batch, total, f))
    a = np.zeros((batch, total, total, l))
    v[:, :n] = rng.uniform(-1.0, 1.0, size=(batch, n, f))
    a[:, :n, :n] = rng.uniform(-1.0, 1.0, size=(batch, n, n, l))
    mask = np.zeros((batch, total), dtype=bool)
    mask[:, :n] = True
    return LayerIO(vertex_features=v, adjacency=a, mask=mask)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
