"""Multilevel graph hierarchies: cluster contraction and support-vector
uncontraction.

Each contraction replaces every cluster by one node whose feature vector is
the node-size-weighted mean of its members, so the weighted mean feature
vector (center of mass) and the total node size are conserved across levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from .clustering import Clustering, compact
from .knn_graph import ZERO_DISTANCE_FLOOR, WeightedGraph, from_edge_list

DEFAULT_STOP_THRESHOLD = 500

# A contraction that shrinks the node count by less than this fraction makes
# no progress; coarsening stops instead of looping.
MIN_SHRINK = 0.05


@dataclass
class Level:
    """One hierarchy level: its graph plus the map from the parent (finer)
    level's node ids onto this level's node ids (``None`` at level 0)."""

    graph: WeightedGraph
    fine_to_coarse: np.ndarray | None


@dataclass
class Hierarchy:
    """Levels ordered finest (index 0) to coarsest."""

    levels: list[Level]
    stop_threshold: int

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def coarsest(self) -> Level:
        return self.levels[-1]

    def summary(self) -> list[tuple[int, int, int, float]]:
        """Rows of (level, nodes, edges, shrink factor vs previous level)."""
        rows = []
        prev = None
        for i, lvl in enumerate(self.levels):
            n = lvl.graph.n
            shrink = 1.0 if prev is None else n / prev
            rows.append((i, n, lvl.graph.num_edges, shrink))
            prev = n
        return rows


def format_summary(rows: list[tuple[int, int, int, float]]) -> str:
    out = [f"{'level':>5} {'nodes':>8} {'edges':>10} {'shrink':>7}"]
    for level, nodes, edges, shrink in rows:
        out.append(f"{level:>5} {nodes:>8} {edges:>10} {shrink:>7.3f}")
    return "\n".join(out)


def contract(g: WeightedGraph, c: Clustering) -> Level:
    """Contract a compact clustering of ``g`` into a coarser level.

    Coarse features are node-size-weighted means of the members; a coarse
    edge exists wherever a fine edge crosses two clusters and its weight is
    the inverse Euclidean distance of the coarse feature vectors (floored
    like k-NN weights).
    """
    n = g.n
    a = np.asarray(c.assignment, dtype=np.int64)
    if a.shape != (n,):
        raise ValueError("clustering does not match the graph")
    k = c.num_clusters
    if n > 0:
        counts = np.bincount(a, minlength=k)
        if len(counts) != k or (counts == 0).any() or a.min() < 0:
            raise ValueError("clustering is not compact")
    sizes = g.node_sizes.astype(np.float64)
    mass = np.bincount(a, weights=sizes, minlength=k)
    agg = sparse.csr_matrix((sizes, (a, np.arange(n))), shape=(k, n))
    coarse_feats = np.asarray(agg @ g.node_features) / mass[:, None]
    coarse_sizes = np.rint(mass).astype(np.int64)

    u_dir = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    v_dir = g.indices
    ca, cb = a[u_dir], a[v_dir]
    cross = ca != cb
    lo = np.minimum(ca[cross], cb[cross])
    hi = np.maximum(ca[cross], cb[cross])
    key = np.unique(lo * k + hi)
    ua, ub = key // k, key % k
    diff = coarse_feats[ua] - coarse_feats[ub]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    w = 1.0 / np.maximum(dist, ZERO_DISTANCE_FLOOR)
    graph = from_edge_list(ua, ub, w, coarse_feats, coarse_sizes)
    return Level(graph=graph, fine_to_coarse=a.copy())


ClusterFn = Callable[[WeightedGraph, int], Clustering]


def build_hierarchy(
    g0: WeightedGraph,
    cluster_fn: ClusterFn,
    stop: int = DEFAULT_STOP_THRESHOLD,
    *,
    min_shrink: float = MIN_SHRINK,
) -> Hierarchy:
    """Repeatedly cluster and contract until the coarsest graph has fewer
    than ``stop`` nodes or a contraction shrinks it by less than
    ``min_shrink`` (the stalled level is discarded)."""
    levels = [Level(graph=g0, fine_to_coarse=None)]
    while levels[-1].graph.n >= stop:
        g = levels[-1].graph
        c = compact(cluster_fn(g, len(levels) - 1))
        lvl = contract(g, c)
        if lvl.graph.n > (1.0 - min_shrink) * g.n:
            break
        levels.append(lvl)
    return Hierarchy(levels=levels, stop_threshold=stop)


def uncontract_sv(h: Hierarchy, level: int, coarse_ids) -> np.ndarray:
    """All node ids at ``level - 1`` whose image at ``level`` lies in
    ``coarse_ids`` (the preimage under fine_to_coarse)."""
    if not 1 <= level < h.num_levels:
        raise ValueError(f"level {level} out of range [1, {h.num_levels})")
    ids = np.unique(np.asarray(list(coarse_ids), dtype=np.int64))
    n_coarse = h.levels[level].graph.n
    if ids.size and (ids.min() < 0 or ids.max() >= n_coarse):
        raise ValueError("coarse node id out of range")
    f2c = h.levels[level].fine_to_coarse
    return np.flatnonzero(np.isin(f2c, ids))
