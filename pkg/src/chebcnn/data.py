"""TU-format dataset loading, node features, batching and CV folds.

TU layout (plain text, 1-indexed):
  <name>_A.txt               comma-separated edge pairs, one per line
  <name>_graph_indicator.txt graph id of each node
  <name>_graph_labels.txt    one label per graph
  <name>_node_labels.txt     optional, one integer per node
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError, ParameterError, ShapeError
from .graphs import Graph, build_graph, degrees, normalized_laplacian, scale_laplacian

BIOINFORMATIC = "bioinformatic"
SOCIAL = "social"

DEFAULT_DEGREE_CAP = 64


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: tuple
    num_classes: int
    feature_dim: int
    provenance: str

    def __len__(self):
        return len(self.graphs)

    def labels(self):
        return np.array([g.label for g in self.graphs], dtype=np.int64)


@dataclass(frozen=True)
class GraphBatch:
    """Block-diagonal scaled Laplacian over all nodes of a graph subset."""

    laplacian: sp.csr_matrix
    features: np.ndarray
    segment_ids: np.ndarray
    labels: np.ndarray

    @property
    def num_graphs(self):
        return len(self.labels)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple
    seed: int

    def train_test(self, i):
        test = self.folds[i]
        train = np.concatenate([f for j, f in enumerate(self.folds) if j != i])
        return np.sort(train), np.sort(test)


def _read_lines(path):
    if not os.path.isfile(path):
        raise IOError(f"missing dataset file: {path}")
    with open(path, "r", newline=None) as fh:
        lines = [ln.strip() for ln in fh]
    while lines and not lines[-1]:
        lines.pop()
    return lines


def _parse_int(value, path, lineno):
    try:
        # labels sometimes appear as "1.0"
        f = float(value)
        i = int(f)
        if i != f:
            raise ValueError
        return i
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: expected integer, got {value!r}")


def load_tu_dataset(root, name) -> Dataset:
    """Load a TU dataset as graphs with raw node-label features.

    Node labels (if present) are stored one-hot over the dataset-wide
    alphabet; without node labels every node gets a single constant feature
    (replace with degree features for social datasets).
    """
    nested = os.path.join(root, name, name)
    flat = os.path.join(root, name)
    prefix = nested if os.path.isfile(f"{nested}_A.txt") else flat
    a_path = f"{prefix}_A.txt"
    ind_path = f"{prefix}_graph_indicator.txt"
    glab_path = f"{prefix}_graph_labels.txt"
    nlab_path = f"{prefix}_node_labels.txt"

    indicator = [_parse_int(v, ind_path, i + 1)
                 for i, v in enumerate(_read_lines(ind_path))]
    num_graphs = max(indicator)
    if sorted(set(indicator)) != list(range(1, num_graphs + 1)):
        raise DataFormatError(f"{ind_path}: graph ids are not contiguous from 1")

    glabels_raw = [_parse_int(v, glab_path, i + 1)
                   for i, v in enumerate(_read_lines(glab_path))]
    if len(glabels_raw) != num_graphs:
        raise DataFormatError(
            f"{glab_path}: {len(glabels_raw)} labels for {num_graphs} graphs")
    classes = sorted(set(glabels_raw))
    remap = {c: i for i, c in enumerate(classes)}
    glabels = [remap[c] for c in glabels_raw]

    node_of = np.array(indicator, dtype=np.int64) - 1
    node_counts = np.bincount(node_of, minlength=num_graphs)
    first_node = np.concatenate([[0], np.cumsum(node_counts)[:-1]])

    node_labels = None
    alphabet = None
    if os.path.isfile(nlab_path):
        raw = []
        for i, v in enumerate(_read_lines(nlab_path)):
            # some dumps carry extra comma-separated attributes; first field is the label
            raw.append(_parse_int(v.split(",")[0], nlab_path, i + 1))
        if len(raw) != len(indicator):
            raise DataFormatError(
                f"{nlab_path}: {len(raw)} node labels for {len(indicator)} nodes")
        alphabet = sorted(set(raw))
        lab_map = {v: i for i, v in enumerate(alphabet)}
        node_labels = [lab_map[v] for v in raw]

    edges_per_graph = [[] for _ in range(num_graphs)]
    for lineno, line in enumerate(_read_lines(a_path), start=1):
        parts = line.replace(" ", "").split(",")
        if len(parts) != 2:
            raise DataFormatError(f"{a_path}:{lineno}: expected 'i,j', got {line!r}")
        i = _parse_int(parts[0], a_path, lineno) - 1
        j = _parse_int(parts[1], a_path, lineno) - 1
        if not (0 <= i < len(indicator) and 0 <= j < len(indicator)):
            raise DataFormatError(f"{a_path}:{lineno}: node index out of range")
        gi, gj = node_of[i], node_of[j]
        if gi != gj:
            raise DataFormatError(
                f"{a_path}:{lineno}: edge endpoints in different graphs ({gi + 1}, {gj + 1})")
        base_n = first_node[gi]
        edges_per_graph[gi].append((i - base_n, j - base_n))

    d = len(alphabet) if alphabet else 1
    graphs = []
    for gid in range(num_graphs):
        n = int(node_counts[gid])
        if n == 0:
            raise DataFormatError(f"{ind_path}: graph {gid + 1} has no nodes")
        x = np.zeros((n, d))
        if node_labels is not None:
            lo = first_node[gid]
            for local in range(n):
                x[local, node_labels[lo + local]] = 1.0
        else:
            x[:, 0] = 1.0
        graphs.append(build_graph(n, edges_per_graph[gid], x, glabels[gid]))

    return Dataset(name=name, graphs=tuple(graphs), num_classes=len(classes),
                   feature_dim=d,
                   provenance=BIOINFORMATIC if node_labels is not None else SOCIAL)


def one_hot_node_features(ds: Dataset) -> Dataset:
    """One-hot features over the dataset-wide node-label alphabet.

    The loader already one-hot encodes label files, so this is the identity
    for bioinformatic datasets; social datasets fall through to degree
    features.
    """
    if ds.provenance != BIOINFORMATIC:
        return degree_node_features(ds)
    return ds


def degree_node_features(ds: Dataset, cap: int = DEFAULT_DEGREE_CAP,
                         one_hot: bool = True) -> Dataset:
    """Label each node with min(degree, cap), one-hot by default."""
    d = cap + 1 if one_hot else 1
    graphs = []
    for g in ds.graphs:
        deg = np.minimum(degrees(g), cap)
        if one_hot:
            x = np.zeros((g.num_nodes, d))
            x[np.arange(g.num_nodes), deg] = 1.0
        else:
            x = deg.astype(np.float64)[:, None]
        graphs.append(Graph(num_nodes=g.num_nodes, edges=g.edges,
                            node_features=x, label=g.label))
    return Dataset(name=ds.name, graphs=tuple(graphs),
                   num_classes=ds.num_classes, feature_dim=d,
                   provenance=ds.provenance)


def prepare_dataset(root, name, degree_cap=DEFAULT_DEGREE_CAP) -> Dataset:
    """Load and attach the conventional features for the dataset family."""
    ds = load_tu_dataset(root, name)
    if ds.provenance == SOCIAL:
        ds = degree_node_features(ds, cap=degree_cap)
    return ds


def stratified_folds(ds: Dataset, k: int = 10, seed: int = 0) -> FoldPlan:
    """Per-class round-robin assignment after a seeded shuffle.

    Degrades to plain shuffled folds (with a warning) when some class has
    fewer than k members.
    """
    if k < 2:
        raise ParameterError(f"need k >= 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    labels = ds.labels()
    folds = [[] for _ in range(k)]
    counts = np.bincount(labels, minlength=ds.num_classes)
    if (counts < k).any():
        import warnings
        warnings.warn(f"{ds.name}: some class has < {k} members; "
                      "using plain shuffled folds")
        order = rng.permutation(len(ds))
        for pos, idx in enumerate(order):
            folds[pos % k].append(int(idx))
    else:
        for c in range(ds.num_classes):
            members = np.flatnonzero(labels == c)
            rng.shuffle(members)
            for pos, idx in enumerate(members):
                folds[pos % k].append(int(idx))
    return FoldPlan(folds=tuple(np.sort(np.array(f, dtype=np.int64)) for f in folds),
                    seed=seed)


def make_batch(graphs, lambda_max: float = 2.0) -> GraphBatch:
    """Assemble a block-diagonal scaled Laplacian, stacked features,
    segment ids and labels."""
    graphs = list(graphs)
    if not graphs:
        raise ShapeError("make_batch: empty graph list")
    d = graphs[0].feature_dim
    blocks = []
    feats = []
    seg = []
    labels = []
    for i, g in enumerate(graphs):
        if g.feature_dim != d:
            raise ShapeError(
                f"feature dim mismatch in batch: {g.feature_dim} != {d}")
        blocks.append(scale_laplacian(normalized_laplacian(g), lambda_max).matrix)
        feats.append(g.node_features)
        seg.append(np.full(g.num_nodes, i, dtype=np.int64))
        labels.append(g.label)
    return GraphBatch(laplacian=sp.block_diag(blocks, format="csr"),
                      features=np.vstack(feats),
                      segment_ids=np.concatenate(seg),
                      labels=np.array(labels, dtype=np.int64))


def write_tu_dataset(ds: Dataset, root, node_labels=None):
    """Serialize graphs back to TU files (round-trip / fixture support).

    ``node_labels`` may supply explicit per-graph integer label vectors;
    otherwise the argmax of the feature rows is written.
    """
    out = os.path.join(root, ds.name)
    os.makedirs(out, exist_ok=True)
    prefix = os.path.join(out, ds.name)
    with open(f"{prefix}_A.txt", "w") as a, \
            open(f"{prefix}_graph_indicator.txt", "w") as ind, \
            open(f"{prefix}_graph_labels.txt", "w") as gl, \
            open(f"{prefix}_node_labels.txt", "w") as nl:
        offset = 0
        for gid, g in enumerate(ds.graphs, start=1):
            for i, j in g.edges:
                a.write(f"{offset + i + 1}, {offset + j + 1}\n")
                a.write(f"{offset + j + 1}, {offset + i + 1}\n")
            labs = (node_labels[gid - 1] if node_labels is not None
                    else g.node_features.argmax(axis=1))
            for local in range(g.num_nodes):
                ind.write(f"{gid}\n")
                nl.write(f"{int(labs[local])}\n")
            gl.write(f"{g.label}\n")
            offset += g.num_nodes
