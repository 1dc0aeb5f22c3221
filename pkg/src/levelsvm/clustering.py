"""Graph clusterings that drive contraction: label propagation and
low-diameter decomposition.

Both algorithms are deterministic given (graph, config, seed) and return a
partition with contiguous cluster ids.  Label propagation uses the edge
weights; the low-diameter decomposition works on hop distances only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knn_graph import WeightedGraph

LABEL_PROPAGATION = "label_propagation"
LOW_DIAMETER = "low_diameter"


@dataclass(frozen=True)
class Clustering:
    assignment: np.ndarray
    num_clusters: int
    method: str


@dataclass(frozen=True)
class LpConfig:
    """Label propagation parameters.

    ``size_constraint`` is accepted for interface compatibility but not
    enforced; the size-constrained variant is deliberately left out.
    """

    rounds: int = 10
    seed: int = 0
    size_constraint: int | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")


@dataclass(frozen=True)
class LdConfig:
    beta: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def compact(c: Clustering) -> Clustering:
    """Remap cluster ids onto [0, num_clusters) in first-occurrence order."""
    a = np.asarray(c.assignment)
    if a.size == 0:
        return Clustering(a.astype(np.int64), 0, c.method)
    vals, first, inv = np.unique(a, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(vals), dtype=np.int64)
    rank[order] = np.arange(len(vals))
    return Clustering(rank[inv], int(len(vals)), c.method)


def label_propagation(g: WeightedGraph, cfg: LpConfig) -> Clustering:
    """Weighted label propagation.

    Starts from singleton clusters and visits nodes in increasing-degree
    order (ties by node id).  A node moves to the cluster with the largest
    total weight of incident edges; it stays wherever its current cluster
    attains that maximum, and remaining ties are broken uniformly with the
    seeded generator.  Stops after ``rounds`` rounds or as soon as a round
    performs no move.
    """
    n = g.n
    assign = np.arange(n, dtype=np.int64)
    if n == 0:
        return Clustering(assign, 0, LABEL_PROPAGATION)
    rng = np.random.default_rng(cfg.seed)
    order = np.lexsort((np.arange(n), g.degrees)).tolist()
    indptr = g.indptr
    indices = g.indices
    weights = g.weights
    for _ in range(cfg.rounds):
        moves = 0
        for v in order:
            s, e = indptr[v], indptr[v + 1]
            if s == e:
                continue
            labs = assign[indices[s:e]].tolist()
            ws = weights[s:e].tolist()
            scores: dict[int, float] = {}
            for c, w in zip(labs, ws):
                scores[c] = scores.get(c, 0.0) + w
            best = max(scores.values())
            cur = int(assign[v])
            if scores.get(cur, 0.0) == best:
                continue
            cands = [c for c, sc in scores.items() if sc == best]
            if len(cands) > 1:
                cands.sort()
                new = cands[int(rng.integers(len(cands)))]
            else:
                new = cands[0]
            assign[v] = new
            moves += 1
        if moves == 0:
            break
    return compact(Clustering(assign, 0, LABEL_PROPAGATION))


def low_diameter_with_shifts(g: WeightedGraph, shifts: np.ndarray) -> Clustering:
    """Low-diameter decomposition for a fixed shift vector (test hook).

    Synchronized multi-source BFS: at iteration t, frontier arrivals are
    processed first, then new searches start from every still-unvisited node
    v with shift in [t, t+1).  A node reached by several searches in the same
    iteration joins the center whose shift has the smaller fractional part
    (center id breaks exact ties).  Every node ends up assigned; isolated
    nodes become their own centers.
    """
    n = g.n
    shifts = np.asarray(shifts, dtype=np.float64)
    if shifts.shape != (n,):
        raise ValueError("one shift per node required")
    center = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return Clustering(center, 0, LOW_DIAMETER)
    frac = shifts - np.floor(shifts)
    start_iter = np.floor(shifts).astype(np.int64)
    order = np.argsort(start_iter, kind="stable").tolist()
    indptr = g.indptr
    indices = g.indices
    frontier: list[int] = []
    ptr = 0
    assigned = 0
    t = 0
    while assigned < n or frontier:
        claims: dict[int, tuple[float, int]] = {}
        for v in frontier:
            c = int(center[v])
            key = (frac[c], c)
            s, e = indptr[v], indptr[v + 1]
            for u in indices[s:e].tolist():
                if center[u] >= 0:
                    continue
                old = claims.get(u)
                if old is None or key < old:
                    claims[u] = key
        new_frontier = sorted(claims)
        for u in new_frontier:
            center[u] = claims[u][1]
        assigned += len(new_frontier)
        while ptr < n and start_iter[order[ptr]] <= t:
            v = order[ptr]
            ptr += 1
            if center[v] < 0:
                center[v] = v
                new_frontier.append(v)
                assigned += 1
        frontier = new_frontier
        t += 1
    return compact(Clustering(center, 0, LOW_DIAMETER))


def low_diameter(g: WeightedGraph, cfg: LdConfig) -> Clustering:
    """Low-diameter decomposition with shifts drawn from Exp(beta).

    Shifts come from the inverse transform -ln(U)/beta with U in (0, 1];
    they are not capped, the start-iteration rule handles arbitrarily large
    values.
    """
    rng = np.random.default_rng(cfg.seed)
    u = 1.0 - rng.random(g.n)  # in (0, 1]
    shifts = -np.log(u) / cfg.beta
    return low_diameter_with_shifts(g, shifts)


def dump_clustering(c: Clustering, f) -> None:
    """Debug dump: one line per node ``node_id cluster_id``."""
    for v, a in enumerate(c.assignment.tolist()):
        f.write(f"{v} {a}\n")
