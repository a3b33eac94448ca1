import numpy as np
import pytest

from meshdenoise.graph import MeshGraph
from meshdenoise.mesh import EdgeSet, Mesh, icosphere


def path_graph(n=3):
    edges = np.array([[i, i + 1] for i in range(n - 1)], dtype=np.int64).reshape(-1, 2)
    return MeshGraph.from_edges(EdgeSet(edges, n), n)


def random_graph(n, p, seed):
    """Erdos-Renyi edge set; returned as a MeshGraph."""
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].shape[0]) < p
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1).astype(np.int64)
    return MeshGraph.from_edges(EdgeSet(edges, n), n)


def random_mesh(n_vertices, n_faces, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n_vertices, 3)) * 10.0 ** rng.integers(-3, 4, size=(n_vertices, 1))
    faces = np.array([rng.choice(n_vertices, 3, replace=False) for _ in range(n_faces)],
                     dtype=np.int64).reshape(-1, 3)
    return Mesh(v, faces)


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(3)


@pytest.fixture(scope="session")
def graph3(sphere3):
    return MeshGraph.from_mesh(sphere3)


@pytest.fixture(scope="session")
def sphere4():
    return icosphere(4)


@pytest.fixture(scope="session")
def graph4(sphere4):
    return MeshGraph.from_mesh(sphere4)


@pytest.fixture
def p3():
    return path_graph(3)


@pytest.fixture
def tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return Mesh(v, f)
