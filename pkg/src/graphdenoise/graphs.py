"""Weighted undirected graphs and their sparse operators.

Every denoiser in this package consumes an immutable :class:`Graph`.  The
graph stores a canonical edge list (tail < head, strictly positive weights)
and lazily exposes CSR views of the adjacency, Laplacian and incidence
matrices.  All operators are applied through sparse matrix-vector products;
dense matrices appear only in test oracles and the spectral reference path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import GraphDisconnectedError, InvalidArgumentError

__all__ = [
    "Graph",
    "VertexSet",
    "build_grid_graph",
    "build_knn_graph",
    "laplacian_apply",
    "incidence_apply",
    "incidence_transpose_apply",
    "dirichlet_energy",
    "laplacian_trace",
    "laplacian_squared_trace",
    "boundary",
    "restrict_laplacian",
    "restrict_adjacency",
    "incidence_columns",
]


def as_signal(f, n: int) -> np.ndarray:
    """Validate and convert a vertex signal to a float64 vector of length n."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise InvalidArgumentError(
            f"expected a length-{n} signal, got shape {arr.shape}"
        )
    return arr


@dataclass(frozen=True)
class VertexSet:
    """A sorted, deduplicated set of vertex ids."""

    members: np.ndarray

    @classmethod
    def from_iterable(cls, ids: Iterable[int], n: int | None = None) -> "VertexSet":
        members = np.unique(np.asarray(list(ids), dtype=np.int64))
        if members.size and members[0] < 0:
            raise InvalidArgumentError("vertex ids must be nonnegative")
        if n is not None and members.size and members[-1] >= n:
            raise InvalidArgumentError(
                f"vertex id {members[-1]} out of range for n={n}"
            )
        return cls(members)

    @classmethod
    def from_mask(cls, mask) -> "VertexSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(np.flatnonzero(mask).astype(np.int64))

    def complement(self, n: int) -> "VertexSet":
        mask = np.ones(n, dtype=bool)
        mask[self.members] = False
        return VertexSet(np.flatnonzero(mask).astype(np.int64))

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        out[self.members] = True
        return out

    def __len__(self) -> int:
        return int(self.members.size)

    def __contains__(self, v) -> bool:
        i = np.searchsorted(self.members, v)
        return bool(i < self.members.size and self.members[i] == v)


@dataclass(frozen=True)
class Graph:
    """Immutable weighted undirected connected graph.

    ``edge_a < edge_b`` for every stored edge; this fixed orientation is
    also used by the incidence matrix (+sqrt(w) at the tail, -sqrt(w) at the
    head).  Construction validates weights, simplicity and connectivity.
    """

    n: int
    edge_a: np.ndarray
    edge_b: np.ndarray
    edge_w: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int, float]]) -> "Graph":
        if n < 1:
            raise InvalidArgumentError("graph needs at least one vertex")
        edges = list(edges)
        if not edges:
            raise InvalidArgumentError("graph needs at least one edge")
        a = np.asarray([e[0] for e in edges], dtype=np.int64)
        b = np.asarray([e[1] for e in edges], dtype=np.int64)
        w = np.asarray([e[2] for e in edges], dtype=np.float64)
        if a.min() < 0 or b.min() < 0 or a.max() >= n or b.max() >= n:
            raise InvalidArgumentError("edge endpoint out of range")
        if np.any(a == b):
            raise InvalidArgumentError("self-loops are not allowed")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InvalidArgumentError("edge weights must be finite and positive")
        # canonical orientation a < b, lexicographic edge order
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        order = np.lexsort((hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                k = int(np.flatnonzero(dup)[0])
                raise InvalidArgumentError(
                    f"duplicate edge ({lo[k]}, {hi[k]})"
                )
        g = cls(n=n, edge_a=lo, edge_b=hi, edge_w=w)
        ncomp, labels = connected_components(g.csr_adjacency, directed=False)
        if ncomp != 1:
            comps = [np.flatnonzero(labels == c).tolist() for c in range(ncomp)]
            raise GraphDisconnectedError(
                f"graph has {ncomp} connected components", components=comps
            )
        return g

    @property
    def m(self) -> int:
        return int(self.edge_w.size)

    @cached_property
    def csr_adjacency(self) -> sp.csr_matrix:
        rows = np.concatenate([self.edge_a, self.edge_b])
        cols = np.concatenate([self.edge_b, self.edge_a])
        data = np.concatenate([self.edge_w, self.edge_w])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.csr_adjacency.sum(axis=1)).ravel()

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        lap = sp.diags(self.degrees, format="csr") - self.csr_adjacency
        return lap.tocsr()

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """m-by-n oriented incidence matrix with +sqrt(w) at a, -sqrt(w) at b."""
        sw = np.sqrt(self.edge_w)
        rows = np.repeat(np.arange(self.m, dtype=np.int64), 2)
        cols = np.stack([self.edge_a, self.edge_b], axis=1).ravel()
        data = np.stack([sw, -sw], axis=1).ravel()
        return sp.csr_matrix((data, (rows, cols)), shape=(self.m, self.n))

    @cached_property
    def incidence_csc(self) -> sp.csc_matrix:
        return self.incidence.tocsc()


def build_grid_graph(height: int, width: int) -> Graph:
    """4-neighbor grid with unit weights; vertex id = row * width + col."""
    if height < 1 or width < 1:
        raise InvalidArgumentError("grid dimensions must be positive")
    if height * width < 2:
        raise InvalidArgumentError("grid needs at least two vertices")
    edges = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.append((v, v + 1, 1.0))
            if r + 1 < height:
                edges.append((v, v + width, 1.0))
    return Graph.from_edges(height * width, edges)


def build_knn_graph(points, k: int) -> Graph:
    """Symmetrized k-nearest-neighbor graph with an adaptive Gaussian kernel.

    The affinity between a and b is exp(-d(a,b)^2 / (sigma_a * sigma_b)),
    where sigma_a is the distance from a to its k-th nearest neighbor, and
    the directed k-NN affinities are symmetrized as (W + W^T) / 2.  Distance
    ties are broken by vertex index.  Raises
    :class:`~graphdenoise.errors.GraphDisconnectedError` (naming the
    components) if the symmetrized graph is disconnected.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise InvalidArgumentError("points must be an n-by-d matrix")
    n = pts.shape[0]
    if k < 1:
        raise InvalidArgumentError("k must be positive")
    if k >= n:
        raise InvalidArgumentError(f"k={k} requires at least k+1={k + 1} points")
    dist = cdist(pts, pts)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    nbrs = order[:, :k]
    sigma = dist[np.arange(n), nbrs[:, -1]]
    sigma = np.maximum(sigma, np.finfo(np.float64).tiny)

    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = nbrs.ravel()
    d2 = dist[rows, cols] ** 2
    aff = np.exp(-d2 / (sigma[rows] * sigma[cols]))
    w_dir = sp.csr_matrix((aff, (rows, cols)), shape=(n, n))
    w_sym = (w_dir + w_dir.T) / 2.0

    coo = sp.triu(w_sym, k=1).tocoo()
    keep = coo.data > 0.0  # drop affinities that underflowed to zero
    edges = list(zip(coo.row[keep].tolist(), coo.col[keep].tolist(),
                     coo.data[keep].tolist()))
    if not edges:
        raise GraphDisconnectedError(
            "k-NN graph has no usable edges",
            components=[[i] for i in range(n)],
        )
    return Graph.from_edges(n, edges)


def laplacian_apply(g: Graph, f) -> np.ndarray:
    """Apply the combinatorial Laplacian: (Lf)(a) = deg(a)f(a) - sum w(a,b)f(b)."""
    f = as_signal(f, g.n)
    return g.laplacian @ f


def incidence_apply(g: Graph, f) -> np.ndarray:
    """Map a vertex signal to the edge vector of weighted oriented differences."""
    f = as_signal(f, g.n)
    return g.incidence @ f


def incidence_transpose_apply(g: Graph, e) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64)
    if e.ndim != 1 or e.shape[0] != g.m:
        raise InvalidArgumentError(
            f"expected a length-{g.m} edge vector, got shape {e.shape}"
        )
    return g.incidence.T @ e


def dirichlet_energy(g: Graph, f) -> float:
    """Smoothness energy sum_(a,b) w(a,b) (f(a) - f(b))^2."""
    f = as_signal(f, g.n)
    diffs = f[g.edge_a] - f[g.edge_b]
    return float(np.dot(g.edge_w * diffs, diffs))


def laplacian_trace(g: Graph) -> float:
    """Trace of L: the total weighted degree."""
    return float(g.degrees.sum())


def laplacian_squared_trace(g: Graph) -> float:
    """Trace of L^2: sum of deg(a)^2 plus, per vertex, its incident w(a,b)^2."""
    w2 = g.edge_w**2
    return float(np.dot(g.degrees, g.degrees) + 2.0 * w2.sum())


def boundary(g: Graph, s: VertexSet) -> VertexSet:
    """Members of s with at least one edge into the complement."""
    _check_set(g, s)
    in_s = s.mask(g.n)
    a_in = in_s[g.edge_a]
    b_in = in_s[g.edge_b]
    out = np.zeros(g.n, dtype=bool)
    out[g.edge_a[a_in & ~b_in]] = True
    out[g.edge_b[b_in & ~a_in]] = True
    return VertexSet.from_mask(out)


def _check_set(g: Graph, s: VertexSet) -> np.ndarray:
    idx = s.members
    if idx.size and (idx[0] < 0 or idx[-1] >= g.n):
        raise InvalidArgumentError("vertex set out of range")
    return idx


def restrict_laplacian(g: Graph, rows: VertexSet, cols: VertexSet) -> sp.csr_matrix:
    """The submatrix L(rows, cols) as a sparse matrix."""
    r = _check_set(g, rows)
    c = _check_set(g, cols)
    return g.laplacian[r][:, c].tocsr()


def restrict_adjacency(g: Graph, rows: VertexSet, cols: VertexSet) -> sp.csr_matrix:
    """The submatrix A(rows, cols) as a sparse matrix."""
    r = _check_set(g, rows)
    c = _check_set(g, cols)
    return g.csr_adjacency[r][:, c].tocsr()


def incidence_columns(g: Graph, cols: VertexSet) -> sp.csc_matrix:
    """The column restriction B(:, cols) as a sparse matrix."""
    c = _check_set(g, cols)
    return g.incidence_csc[:, c]
