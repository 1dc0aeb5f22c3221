"""Exact k-nearest-neighbor graphs with inverse-distance edge weights.

One graph is built per class; the directed k-NN relation is symmetrized by
union (an edge exists if either endpoint lists the other among its k nearest
points).  Neighbor search uses a KD-tree up to a configurable dimensionality
and chunked brute force above it; both honor the same deterministic
tie-breaking rule: equal distances are resolved toward the lower point index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

# Distances are floored here before inversion so coincident points do not
# produce unbounded weights.
ZERO_DISTANCE_FLOOR = 1e-12

# Above this dimensionality the KD-tree stops paying off; fall back to brute
# force (both backends are exact).
DEFAULT_INDEX_DIM_LIMIT = 30

# Extra neighbors fetched beyond k to detect ties crossing the k-th boundary.
_TIE_SLACK = 8


@dataclass
class WeightedGraph:
    """Undirected weighted graph in CSR form with node features and sizes.

    ``node_sizes[u]`` counts the original points node ``u`` represents; the
    sum over all nodes is invariant across hierarchy levels.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    node_features: np.ndarray
    node_sizes: np.ndarray

    @property
    def n(self) -> int:
        return self.node_features.shape[0]

    @property
    def dim(self) -> int:
        return self.node_features.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[u], self.indptr[u + 1]
        return self.indices[s:e], self.weights[s:e]

    def edges(self):
        """Iterate undirected edges as (u, v, w) with u < v."""
        for u in range(self.n):
            ids, ws = self.neighbors(u)
            for v, w in zip(ids.tolist(), ws.tolist()):
                if u < v:
                    yield u, v, w


def from_edge_list(
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    node_features: np.ndarray,
    node_sizes: np.ndarray,
) -> WeightedGraph:
    """Assemble a CSR graph from unique undirected edges (u < v)."""
    n = node_features.shape[0]
    a = np.concatenate([u, v])
    b = np.concatenate([v, u])
    ww = np.concatenate([w, w])
    order = np.lexsort((b, a))
    a, b, ww = a[order], b[order], ww[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a, minlength=n), out=indptr[1:])
    return WeightedGraph(
        indptr=indptr,
        indices=b.astype(np.int64),
        weights=ww.astype(np.float64),
        node_features=node_features,
        node_sizes=node_sizes.astype(np.int64),
    )


def _brute_row(points: np.ndarray, sqnorms: np.ndarray, i: int, k: int) -> np.ndarray:
    """Exact k nearest of point i ordered by (distance, index)."""
    d2 = sqnorms + sqnorms[i] - 2.0 * (points @ points[i])
    np.maximum(d2, 0.0, out=d2)
    d2[i] = np.inf
    order = np.argsort(d2, kind="stable")  # index order breaks distance ties
    return order[:k]


def _knn_kdtree(points: np.ndarray, k: int) -> np.ndarray:
    n = points.shape[0]
    tree = cKDTree(points)
    m = min(n, k + 1 + _TIE_SLACK)
    dist, idx = tree.query(points, k=m)
    if m == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    nbrs = np.empty((n, k), dtype=np.int64)
    self_first = idx[:, 0] == np.arange(n)
    has_tie = (np.diff(dist, axis=1) == 0.0).any(axis=1)
    boundary = np.zeros(n, dtype=bool)
    if m < n:
        boundary = dist[:, k] == dist[:, m - 1]
    easy = self_first & ~has_tie & ~boundary
    nbrs[easy] = idx[easy, 1 : k + 1]
    hard = np.flatnonzero(~easy)
    if hard.size:
        sqnorms = np.einsum("ij,ij->i", points, points)
        for i in hard.tolist():
            nbrs[i] = _brute_row(points, sqnorms, i, k)
    return nbrs


def _knn_bruteforce(points: np.ndarray, k: int) -> np.ndarray:
    n = points.shape[0]
    sqnorms = np.einsum("ij,ij->i", points, points)
    nbrs = np.empty((n, k), dtype=np.int64)
    kk = min(n - 1, k + _TIE_SLACK)
    chunk = max(1, min(n, 16_777_216 // n))
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        q = points[s:e]
        d2 = sqnorms[s:e, None] + sqnorms[None, :] - 2.0 * (q @ points.T)
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(s, e)
        d2[np.arange(e - s), rows] = np.inf
        part = np.argpartition(d2, kk - 1, axis=1)[:, :kk]
        pd = np.take_along_axis(d2, part, axis=1)
        # Order candidates by (distance, index): sort by index first, then a
        # stable sort by distance keeps the index order inside ties.
        oi = np.argsort(part, axis=1, kind="stable")
        part = np.take_along_axis(part, oi, axis=1)
        pd = np.take_along_axis(pd, oi, axis=1)
        od = np.argsort(pd, axis=1, kind="stable")
        part = np.take_along_axis(part, od, axis=1)
        pd = np.take_along_axis(pd, od, axis=1)
        nbrs[s:e] = part[:, :k]
        if kk < n - 1:
            suspicious = np.flatnonzero(pd[:, k - 1] == pd[:, kk - 1])
            for r in suspicious.tolist():
                nbrs[s + r] = _brute_row(points, sqnorms, s + r, k)
    return nbrs


def build_knn_graph(
    points: np.ndarray,
    k: int,
    *,
    index_dim_limit: int = DEFAULT_INDEX_DIM_LIMIT,
) -> WeightedGraph:
    """Build the union-symmetrized exact k-NN graph of a point set.

    Edge weights are 1/dist(p, q) in Euclidean distance, recomputed once per
    undirected edge from the feature vectors, with zero distances floored at
    :data:`ZERO_DISTANCE_FLOOR`.  ``k >= n`` is clamped to ``n - 1`` with a
    warning; a single point yields an edgeless graph.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    if k < 1:
        raise ValueError("k must be at least 1")
    sizes = np.ones(n, dtype=np.int64)
    if n == 1:
        return from_edge_list(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), points, sizes
        )
    k_eff = min(k, n - 1)
    if k_eff < k:
        warnings.warn(f"k={k} clamped to n-1={k_eff}", stacklevel=2)
    if points.shape[1] <= index_dim_limit:
        nbrs = _knn_kdtree(points, k_eff)
    else:
        nbrs = _knn_bruteforce(points, k_eff)

    u = np.repeat(np.arange(n, dtype=np.int64), k_eff)
    v = nbrs.ravel()
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    key = np.unique(lo * n + hi)
    ua, ub = key // n, key % n
    diff = points[ua] - points[ub]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    w = 1.0 / np.maximum(dist, ZERO_DISTANCE_FLOOR)
    return from_edge_list(ua, ub, w, points, sizes)


def dump_graph(g: WeightedGraph, f) -> None:
    """Debug dump: one line per undirected edge ``u v weight`` with u < v."""
    for u, v, w in g.edges():
        f.write(f"{u} {v} {w:.17g}\n")
