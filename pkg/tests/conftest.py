"""Shared fixtures and independent dense oracles for the test suite.

The oracles here deliberately avoid the library's sparse code paths: dense
matrices are assembled straight from the edge list, connectivity is checked
by union-find, and least squares goes through numpy.  Tests compare the
production implementations against these.
"""

import numpy as np
import pytest

from graphdenoise import Graph, build_grid_graph


def dense_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for u, v, w in zip(g.edge_a, g.edge_b, g.edge_w):
        a[u, v] += w
        a[v, u] += w
    return a


def dense_laplacian(g: Graph) -> np.ndarray:
    a = dense_adjacency(g)
    return np.diag(a.sum(axis=1)) - a


def dense_incidence(g: Graph) -> np.ndarray:
    b = np.zeros((g.m, g.n))
    for e, (u, v, w) in enumerate(zip(g.edge_a, g.edge_b, g.edge_w)):
        b[e, u] = np.sqrt(w)
        b[e, v] = -np.sqrt(w)
    return b


def union_find_components(n: int, edges) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(v) for v in range(n)})


def random_connected_graph(n: int, extra: int, rng: np.random.Generator) -> Graph:
    """Random tree plus `extra` chords, weights in [0.5, 2]."""
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, float(rng.uniform(0.5, 2.0))))
    have = {(min(u, v), max(u, v)) for u, v, _ in edges}
    tries = 0
    while len(edges) < n - 1 + extra and tries < 50 * (extra + 1):
        tries += 1
        u, v = sorted(int(x) for x in rng.integers(0, n, 2))
        if u == v or (u, v) in have:
            continue
        have.add((u, v))
        edges.append((u, v, float(rng.uniform(0.5, 2.0))))
    return Graph.from_edges(n, edges)


@pytest.fixture
def p3() -> Graph:
    """Path on three vertices with unit weights."""
    return build_grid_graph(1, 3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
