"""Graphs, degree vectors, Laplacians and the scaled Laplacian operator.

All spectral convolutions consume the scaled operator 2L/lambda_max - I
built from the symmetric normalized Laplacian.  Matrices are kept sparse
(CSR); small graphs can be densified on demand for the eigendecomposition
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError, ParameterError, ShapeError, StructuralError

DENSE_LIMIT = 512  # largest n for which dense eigendecomposition is allowed

COMBINATORIAL = "combinatorial"
NORMALIZED = "normalized"


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph with node features and a class label.

    ``edges`` holds canonical (min, max) pairs, deduplicated, no self loops.
    """

    num_nodes: int
    edges: tuple
    node_features: np.ndarray
    label: int

    @property
    def feature_dim(self):
        return self.node_features.shape[1]


@dataclass(frozen=True)
class Laplacian:
    matrix: sp.csr_matrix
    kind: str

    def dense(self):
        return self.matrix.toarray()


@dataclass(frozen=True)
class ScaledLaplacian:
    matrix: sp.csr_matrix
    lambda_max: float

    def dense(self):
        return self.matrix.toarray()


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def build_graph(num_nodes, edge_list, features, label):
    """Validate, symmetrize and deduplicate an edge list into a Graph.

    Self loops are dropped; out-of-range indices raise StructuralError.
    """
    if num_nodes < 1:
        raise StructuralError(f"num_nodes must be >= 1, got {num_nodes}")
    canonical = set()
    for i, j in edge_list:
        if not (0 <= i < num_nodes and 0 <= j < num_nodes):
            raise StructuralError(
                f"edge ({i},{j}) out of range for {num_nodes} nodes")
        if i == j:
            continue
        canonical.add((min(i, j), max(i, j)))
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"node features must be 2-D, got shape {features.shape}")
    if features.shape[0] != num_nodes:
        raise ShapeError(
            f"feature rows ({features.shape[0]}) != num_nodes ({num_nodes})")
    if features.shape[1] < 1:
        raise ShapeError("feature dimension must be >= 1")
    features = features.copy()
    features.setflags(write=False)
    return Graph(num_nodes=num_nodes, edges=tuple(sorted(canonical)),
                 node_features=features, label=int(label))


def adjacency(g: Graph) -> sp.csr_matrix:
    """Binary symmetric adjacency matrix."""
    n = g.num_nodes
    if not g.edges:
        return sp.csr_matrix((n, n), dtype=np.float64)
    rows = []
    cols = []
    for i, j in g.edges:
        rows += [i, j]
        cols += [j, i]
    data = np.ones(len(rows), dtype=np.float64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def degrees(g: Graph) -> np.ndarray:
    deg = np.zeros(g.num_nodes, dtype=np.int64)
    for i, j in g.edges:
        deg[i] += 1
        deg[j] += 1
    return deg


def combinatorial_laplacian(g: Graph) -> Laplacian:
    """L = D - W."""
    w = adjacency(g)
    d = sp.diags(degrees(g).astype(np.float64))
    return Laplacian(matrix=(d - w).tocsr(), kind=COMBINATORIAL)


def normalized_laplacian(g: Graph) -> Laplacian:
    """L = I - D^{-1/2} W D^{-1/2}.

    Degree-0 vertices get a zero row/column (their D^{-1/2} entry is taken
    as 0), so the operator stays well defined on graphs with isolated nodes.
    """
    n = g.num_nodes
    deg = degrees(g).astype(np.float64)
    inv_sqrt = np.zeros(n)
    nz = deg > 0
    inv_sqrt[nz] = deg[nz] ** -0.5
    d_inv_sqrt = sp.diags(inv_sqrt)
    w = adjacency(g)
    eye = sp.diags(np.where(nz, 1.0, 0.0))
    lap = eye - d_inv_sqrt @ w @ d_inv_sqrt
    return Laplacian(matrix=lap.tocsr(), kind=NORMALIZED)


def scale_laplacian(l: Laplacian, lambda_max: float = 2.0) -> ScaledLaplacian:
    """2L/lambda_max - I, mapping the spectrum of L into [-1, 1]."""
    if lambda_max <= 0:
        raise ParameterError(f"lambda_max must be positive, got {lambda_max}")
    if l.kind != NORMALIZED:
        raise ParameterError(
            "scale_laplacian expects the normalized Laplacian; "
            f"got kind={l.kind!r}")
    n = l.matrix.shape[0]
    scaled = (2.0 / lambda_max) * l.matrix - sp.identity(n, format="csr")
    return ScaledLaplacian(matrix=scaled.tocsr(), lambda_max=float(lambda_max))


def exact_lambda_max(l: Laplacian) -> float:
    """Largest eigenvalue of L (dense path, n <= DENSE_LIMIT)."""
    return float(eigendecomposition(l).eigenvalues[-1])


def eigendecomposition(l: Laplacian) -> EigenDecomposition:
    n = l.matrix.shape[0]
    if n > DENSE_LIMIT:
        raise NumericalError(
            f"dense eigendecomposition limited to n <= {DENSE_LIMIT}, got {n}")
    try:
        vals, vecs = np.linalg.eigh(l.dense())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def permute_graph(g: Graph, perm) -> Graph:
    """Relabel vertices: new index of old vertex i is perm[i]."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (g.num_nodes,) or sorted(perm.tolist()) != list(range(g.num_nodes)):
        raise ParameterError("perm must be a bijection on [0, n)")
    edges = [(perm[i], perm[j]) for i, j in g.edges]
    feats = np.empty_like(g.node_features)
    feats[perm] = g.node_features
    return build_graph(g.num_nodes, edges, feats, g.label)
