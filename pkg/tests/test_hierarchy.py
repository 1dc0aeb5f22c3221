import numpy as np
import pytest

from levelsvm.clustering import Clustering, LpConfig, label_propagation
from levelsvm.hierarchy import build_hierarchy, contract, uncontract_sv
from levelsvm.knn_graph import build_knn_graph, from_edge_list
from levelsvm.synthetic import blobs


def simple_graph(feats, edges, sizes=None):
    feats = np.asarray(feats, dtype=np.float64)
    n = len(feats)
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=np.float64)
    if sizes is None:
        sizes = np.ones(n, dtype=np.int64)
    return from_edge_list(u, v, w, feats, np.asarray(sizes, dtype=np.int64))


def clustering(assignment):
    a = np.asarray(assignment, dtype=np.int64)
    return Clustering(a, int(a.max()) + 1, "test")


# ---------------------------------------------------------------------------
# contract


def test_contract_singleton_clustering_preserves_structure():
    rng = np.random.default_rng(0)
    g = build_knn_graph(rng.normal(size=(30, 3)), k=4)
    lvl = contract(g, clustering(np.arange(30)))
    assert lvl.graph.n == g.n
    assert np.array_equal(lvl.graph.node_features, g.node_features)
    assert np.array_equal(lvl.graph.indptr, g.indptr)
    assert np.array_equal(lvl.graph.indices, g.indices)
    # distances between features are unchanged, so weights match exactly
    assert np.allclose(lvl.graph.weights, g.weights, rtol=1e-12)


def test_contract_two_clusters_hand_computed():
    feats = [[0.0, 0.0], [2.0, 0.0], [5.0, 0.0]]
    g = simple_graph(feats, [(0, 1, 1.0), (1, 2, 1.0)])
    lvl = contract(g, clustering([0, 0, 1]))
    cg = lvl.graph
    assert cg.n == 2
    assert np.allclose(cg.node_features[0], [1.0, 0.0])
    assert np.allclose(cg.node_features[1], [5.0, 0.0])
    edges = {(u, v): w for u, v, w in cg.edges()}
    assert edges == {(0, 1): pytest.approx(0.25)}  # 1 / dist((1,0),(5,0))


def test_contract_weighted_mean_uses_node_sizes():
    feats = [[0.0], [4.0]]
    g = simple_graph(feats, [(0, 1, 1.0)], sizes=[3, 1])
    lvl = contract(g, clustering([0, 0]))
    assert lvl.graph.node_features[0, 0] == pytest.approx(1.0)  # (3*0 + 1*4)/4
    assert lvl.graph.node_sizes[0] == 4


def test_contract_rejects_non_compact():
    g = simple_graph([[0.0], [1.0]], [(0, 1, 1.0)])
    with pytest.raises(ValueError, match="not compact"):
        contract(g, Clustering(np.array([0, 2]), 3, "bad"))


# ---------------------------------------------------------------------------
# build_hierarchy


def lp_fn(seed=0):
    return lambda g, level: label_propagation(g, LpConfig(seed=seed + level))


def test_no_contraction_below_threshold():
    g = build_knn_graph(np.random.default_rng(1).normal(size=(300, 2)), k=5)
    h = build_hierarchy(g, lp_fn(), stop=500)
    assert h.num_levels == 1


def test_blobs_shrink_aggressively():
    data = blobs(1000, 1000, d=4, separation=10.0, seed=2)
    g = build_knn_graph(data.features[data.labels > 0], k=10)
    h = build_hierarchy(g, lp_fn(), stop=100)
    assert h.num_levels >= 2
    assert h.levels[1].graph.n <= 0.1 * h.levels[0].graph.n


def test_edgeless_graph_triggers_stall_guard():
    g = from_edge_list(
        np.empty(0, np.int64),
        np.empty(0, np.int64),
        np.empty(0),
        np.random.default_rng(3).normal(size=(1000, 2)),
        np.ones(1000, dtype=np.int64),
    )
    h = build_hierarchy(g, lp_fn(), stop=500)
    assert h.num_levels == 1


def test_mass_and_center_of_mass_conserved():
    data = blobs(800, 800, d=3, separation=9.0, seed=4)
    pts = data.features[data.labels > 0]
    g = build_knn_graph(pts, k=10)
    h = build_hierarchy(g, lp_fn(), stop=10)
    total0 = g.node_sizes.sum()
    com0 = (g.node_sizes[:, None] * g.node_features).sum(axis=0) / total0
    for lvl in h.levels[1:]:
        assert lvl.graph.node_sizes.sum() == total0
        com = (lvl.graph.node_sizes[:, None] * lvl.graph.node_features).sum(
            axis=0
        ) / total0
        assert np.allclose(com, com0, atol=1e-9)


def test_strictly_decreasing_node_counts():
    data = blobs(600, 600, d=2, separation=8.0, seed=5)
    g = build_knn_graph(data.features, k=10)
    h = build_hierarchy(g, lp_fn(), stop=20)
    counts = [lvl.graph.n for lvl in h.levels]
    assert all(a > b for a, b in zip(counts, counts[1:]))


# ---------------------------------------------------------------------------
# uncontract_sv


def build_two_level():
    feats = [[0.0], [0.1], [0.2], [5.0], [5.1]]
    g = simple_graph(feats, [(0, 1, 10.0), (1, 2, 10.0), (3, 4, 10.0), (2, 3, 0.1)])
    lvl = contract(g, clustering([0, 0, 0, 1, 1]))
    from levelsvm.hierarchy import Hierarchy, Level

    return Hierarchy([Level(g, None), lvl], stop_threshold=1)


def test_uncontract_preimage():
    h = build_two_level()
    assert uncontract_sv(h, 1, [0]).tolist() == [0, 1, 2]
    assert uncontract_sv(h, 1, [1]).tolist() == [3, 4]


def test_uncontract_empty_and_full():
    h = build_two_level()
    assert uncontract_sv(h, 1, []).tolist() == []
    assert uncontract_sv(h, 1, [0, 1]).tolist() == [0, 1, 2, 3, 4]


def test_uncontract_validates_arguments():
    h = build_two_level()
    with pytest.raises(ValueError):
        uncontract_sv(h, 0, [0])
    with pytest.raises(ValueError):
        uncontract_sv(h, 2, [0])
    with pytest.raises(ValueError):
        uncontract_sv(h, 1, [7])


def test_summary_rows():
    h = build_two_level()
    rows = h.summary()
    assert rows[0][:3] == (0, 5, 4)
    assert rows[1][:2] == (1, 2)
    assert rows[1][3] == pytest.approx(2 / 5)
