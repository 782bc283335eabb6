"""Random and structured graph generators for verification and smoke runs."""

from __future__ import annotations

import numpy as np

from .data import BIOINFORMATIC, Dataset
from .graphs import build_graph


def random_connected_graph(n, rng, d=3, extra_edge_prob=0.3, label=0):
    """Random spanning tree plus extra edges; features standard normal."""
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.append((i, j))
    x = rng.standard_normal((n, d))
    return build_graph(n, edges, x, label)


def random_graph(n, rng, d=3, edge_prob=0.3, label=0):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < edge_prob]
    return build_graph(n, edges, rng.standard_normal((n, d)), label)


def cycle_graph(n, d, label):
    edges = [(i, (i + 1) % n) for i in range(n)]
    x = np.ones((n, d))
    return build_graph(n, edges, x, label)


def star_graph(n, d, label):
    edges = [(0, i) for i in range(1, n)]
    x = np.ones((n, d))
    return build_graph(n, edges, x, label)


def make_synthetic_dataset(num_graphs=40, d=4, seed=0, name="SYNTH"):
    """Binary dataset separable by structure: cycles (label 0) vs stars
    (label 1), with sizes jittered so it is not a one-graph lookup."""
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(num_graphs):
        n = int(rng.integers(6, 14))
        if i % 2 == 0:
            graphs.append(cycle_graph(n, d, 0))
        else:
            graphs.append(star_graph(n, d, 1))
    return Dataset(name=name, graphs=tuple(graphs), num_classes=2,
                   feature_dim=d, provenance=BIOINFORMATIC)
