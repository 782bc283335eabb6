import os

import numpy as np
import pytest

from chebcnn.graphs import build_graph

DATA_ROOT = os.environ.get("CHEBCNN_DATA_ROOT",
                           os.path.join(os.path.dirname(__file__), "..", "data"))


def dataset_available(name):
    for prefix in (os.path.join(DATA_ROOT, name, name),
                   os.path.join(DATA_ROOT, name)):
        if os.path.isfile(f"{prefix}_A.txt"):
            return True
    return False


def require_dataset(name):
    if not dataset_available(name):
        pytest.skip(f"dataset {name} not found under {DATA_ROOT}; "
                    "run scripts/fetch_tu_datasets.py (needs network)")


def path_graph(n, d=1):
    x = np.ones((n, d))
    return build_graph(n, [(i, i + 1) for i in range(n - 1)], x, 0)


@pytest.fixture
def tu_fixture_root(tmp_path):
    """Two hand-written TU graphs: a triangle (label 1) and a single edge
    (label -1), with node labels {0,1,2}."""
    root = tmp_path / "tu"
    d = root / "TINY"
    d.mkdir(parents=True)
    (d / "TINY_A.txt").write_text(
        "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n")
    (d / "TINY_graph_indicator.txt").write_text("1\n1\n1\n2\n2\n")
    (d / "TINY_graph_labels.txt").write_text("1\n-1\n")
    (d / "TINY_node_labels.txt").write_text("0\n1\n2\n0\n1\n")
    return str(root)
