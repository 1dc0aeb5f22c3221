import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levelsvm.clustering import (
    Clustering,
    LdConfig,
    LpConfig,
    compact,
    label_propagation,
    low_diameter,
    low_diameter_with_shifts,
)
from levelsvm.knn_graph import build_knn_graph, from_edge_list


def graph_from_edges(n, edges, d=1):
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=np.float64)
    feats = np.arange(n, dtype=np.float64).reshape(n, 1).repeat(d, axis=1)
    return from_edge_list(u, v, w, feats, np.ones(n, dtype=np.int64))


def assert_partition(c, n):
    assert c.assignment.shape == (n,)
    ids = np.unique(c.assignment)
    assert ids.min() == 0 and ids.max() == c.num_clusters - 1
    assert len(ids) == c.num_clusters


# ---------------------------------------------------------------------------
# compact


def test_compact_examples():
    c = compact(Clustering(np.array([5, 5, 9]), 0, "x"))
    assert c.assignment.tolist() == [0, 0, 1] and c.num_clusters == 2
    c = compact(Clustering(np.array([0, 1, 1, 2]), 3, "x"))
    assert c.assignment.tolist() == [0, 1, 1, 2]
    c = compact(Clustering(np.array([3, 1, 3, 1]), 0, "x"))
    assert c.assignment.tolist() == [0, 1, 0, 1]


# ---------------------------------------------------------------------------
# label propagation


def two_triangles():
    edges = [
        (0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0),
        (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0),
        (2, 3, 0.01),
    ]
    return graph_from_edges(6, edges)


def test_lp_two_triangles_split():
    g = two_triangles()
    c = label_propagation(g, LpConfig(seed=0))
    assert c.num_clusters == 2
    assert len({c.assignment[0], c.assignment[1], c.assignment[2]}) == 1
    assert len({c.assignment[3], c.assignment[4], c.assignment[5]}) == 1
    assert c.assignment[0] != c.assignment[3]
    # no node prefers the other triangle: internal weight 2.0 vs bridge 0.01
    for v in range(6):
        ids, ws = g.neighbors(v)
        own = sum(w for u, w in zip(ids, ws) if c.assignment[u] == c.assignment[v])
        other = sum(w for u, w in zip(ids, ws) if c.assignment[u] != c.assignment[v])
        assert own > other


def test_lp_edgeless_graph_stays_singleton():
    g = graph_from_edges(4, [])
    c = label_propagation(g, LpConfig(seed=1))
    assert c.num_clusters == 4


def test_lp_single_edge_merges():
    g = graph_from_edges(2, [(0, 1, 1.0)])
    c = label_propagation(g, LpConfig(seed=2))
    assert c.num_clusters == 1


def test_lp_deterministic_per_seed():
    g = build_knn_graph(np.random.default_rng(3).normal(size=(120, 2)), k=5)
    a = label_propagation(g, LpConfig(seed=7)).assignment
    b = label_propagation(g, LpConfig(seed=7)).assignment
    assert np.array_equal(a, b)


def test_lp_never_merges_components():
    # two separate edges: clusters must stay within components
    g = graph_from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    c = label_propagation(g, LpConfig(seed=0))
    assert c.assignment[0] == c.assignment[1]
    assert c.assignment[2] == c.assignment[3]
    assert c.assignment[0] != c.assignment[2]


@settings(max_examples=20)
@given(st.integers(10, 60), st.integers(0, 2**31 - 1))
def test_lp_is_partition_on_random_graphs(n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    g = build_knn_graph(pts, k=3)
    c = label_propagation(g, LpConfig(seed=seed))
    assert_partition(c, n)


# ---------------------------------------------------------------------------
# low-diameter decomposition


def test_ld_all_small_shifts_gives_singletons():
    g = two_triangles()
    c = low_diameter_with_shifts(g, np.full(6, 0.2))
    assert c.num_clusters == 6


def test_ld_beta_huge_gives_singletons():
    pts = np.random.default_rng(5).normal(size=(50, 2))
    g = build_knn_graph(pts, k=4)
    c = low_diameter(g, LdConfig(beta=1e6, seed=1))
    assert c.num_clusters == 50


def test_ld_two_node_path_both_start_at_zero():
    g = graph_from_edges(2, [(0, 1, 1.0)])
    c = low_diameter_with_shifts(g, np.array([0.9, 0.1]))
    assert c.num_clusters == 2


def test_ld_star_center_claimed_before_it_starts():
    # leaves (shift 0.2) start at t=0; their searches reach the center at
    # t=1 before the center (shift 1.7) would start at t=1
    edges = [(4, leaf, 1.0) for leaf in range(4)]
    g = graph_from_edges(5, edges)
    shifts = np.array([0.2, 0.2, 0.2, 0.2, 1.7])
    c = low_diameter_with_shifts(g, shifts)
    assert c.num_clusters == 4
    assert c.assignment[4] == c.assignment[0]  # smallest id wins the frac tie


def test_ld_fractional_tiebreak():
    # center 2 reachable from both 0 and 1 in one hop; 1 has the smaller
    # fractional shift so it wins
    g = graph_from_edges(3, [(0, 2, 1.0), (1, 2, 1.0)])
    c = low_diameter_with_shifts(g, np.array([0.6, 0.3, 2.5]))
    assert c.assignment[2] == c.assignment[1]
    assert c.assignment[2] != c.assignment[0]


def test_ld_clusters_are_connected():
    pts = np.random.default_rng(6).normal(size=(300, 2))
    g = build_knn_graph(pts, k=5)
    c = low_diameter(g, LdConfig(beta=0.4, seed=3))
    assert_partition(c, 300)
    for cid in range(c.num_clusters):
        members = np.flatnonzero(c.assignment == cid)
        assert _is_connected(g, set(members.tolist()))


def test_ld_isolated_nodes_become_centers():
    g = graph_from_edges(3, [(0, 1, 1.0)])
    c = low_diameter_with_shifts(g, np.array([5.0, 5.5, 9.0]))
    assert c.assignment[2] not in (c.assignment[0], c.assignment[1])


def test_ld_deterministic_per_seed():
    pts = np.random.default_rng(8).normal(size=(200, 3))
    g = build_knn_graph(pts, k=5)
    a = low_diameter(g, LdConfig(beta=0.4, seed=11)).assignment
    b = low_diameter(g, LdConfig(beta=0.4, seed=11)).assignment
    assert np.array_equal(a, b)


def _is_connected(g, members):
    if not members:
        return True
    start = next(iter(members))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        ids, _ = g.neighbors(v)
        for u in ids.tolist():
            if u in members and u not in seen:
                seen.add(u)
                stack.append(u)
    return seen == members


def cluster_hop_diameter(g, members):
    """Exact hop diameter of the induced subgraph (BFS from every node)."""
    best = 0
    members = set(members)
    for src in members:
        dist = {src: 0}
        queue = [src]
        while queue:
            nxt = []
            for v in queue:
                ids, _ = g.neighbors(v)
                for u in ids.tolist():
                    if u in members and u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            queue = nxt
        best = max(best, max(dist.values()))
    return best


def test_ld_config_validation():
    with pytest.raises(ValueError):
        LdConfig(beta=0.0)
    with pytest.raises(ValueError):
        LpConfig(rounds=0)
