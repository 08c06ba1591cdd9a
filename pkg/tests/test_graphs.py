import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embedrisk.graphs import (
    DegenerateThresholdError,
    Graph,
    GraphSizeError,
    all_couples,
    all_pairs_distances,
    complete_ary_tree,
    edge_labels,
    euclidean_plane_vmin_lower_bound,
    max_disjoint_star_packing,
    path_graph,
    random_tree,
    read_edge_list,
    sphere_packing_number,
    star_graph,
    tree_center,
    true_label,
    write_edge_list,
    _star_packing_exhaustive,
)


def test_complete_ary_tree_counts():
    assert complete_ary_tree(5, 4).vertex_count == 156
    t = complete_ary_tree(1, 3)
    assert t.vertex_count == 3 and t.edge_count == 2  # unary tree is a path
    t2 = complete_ary_tree(2, 3)
    assert t2.vertex_count == 7 and t2.edge_count == 6


@pytest.mark.parametrize("arity,levels", [(2, 5), (3, 4), (7, 3)])
def test_complete_ary_tree_vertex_formula(arity, levels):
    t = complete_ary_tree(arity, levels)
    assert t.vertex_count == (arity**levels - 1) // (arity - 1)
    assert t.edge_count == t.vertex_count - 1


def test_complete_ary_tree_size_error():
    with pytest.raises(GraphSizeError):
        complete_ary_tree(10, 12)


def test_distances_basics():
    dm = all_pairs_distances(path_graph(3))
    assert dm.value(0, 2) == 2
    assert dm.value(1, 1) == 0
    iso = Graph(2, frozenset())
    assert all_pairs_distances(iso).value(0, 1) == math.inf


def test_true_label():
    dm = all_pairs_distances(path_graph(3))
    assert true_label(dm, (0, 1)) == 1
    assert true_label(dm, (0, 2)) == -1
    iso = all_pairs_distances(Graph(2, frozenset()))
    assert true_label(iso, (0, 1)) == -1
    with pytest.raises(DegenerateThresholdError):
        true_label(dm, (0, 2), tau=2.0)


def test_labels_match_edges():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(3, 12))
        edges = [c for c in all_couples(n) if rng.random() < 0.3]
        g = Graph.from_edges(n, edges)
        labels = edge_labels(g)
        for c, y in zip(all_couples(n), labels):
            assert (y == 1) == (c in g.edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10**9))
def test_distance_symmetry_and_triangle(n, seed):
    rng = np.random.default_rng(seed)
    edges = [c for c in all_couples(n) if rng.random() < 0.25]
    g = Graph.from_edges(n, edges)
    dm = all_pairs_distances(g)
    h = dm.hops
    assert np.array_equal(h, h.T)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                dij, dik, dkj = dm.value(i, j), dm.value(i, k), dm.value(k, j)
                if math.isfinite(dik) and math.isfinite(dkj):
                    assert dij <= dik + dkj


def test_star_packing_examples():
    assert max_disjoint_star_packing(star_graph(6), 6).count == 1
    assert max_disjoint_star_packing(path_graph(10), 6).count == 0
    t = complete_ary_tree(5, 4)
    dp = max_disjoint_star_packing(t, 6)
    assert dp.exact and dp.method == "tree-dp"
    assert dp.count == _star_packing_exhaustive(t, 6)


def test_star_packing_matching_case():
    # k = 1 stars are edges: packing equals maximum matching
    p = path_graph(5)
    assert max_disjoint_star_packing(p, 1).count == 2
    assert max_disjoint_star_packing(path_graph(6), 1).count == 3


def test_star_packing_dp_vs_bruteforce_random_trees():
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(2, 21))
        k = int(rng.integers(2, 7))
        t = random_tree(n, rng)
        dp = max_disjoint_star_packing(t, k)
        assert dp.exact
        assert dp.count == _star_packing_exhaustive(t, k)


def test_star_packing_cycle_graph_exact():
    # cycles are not forests: exercises the branch-and-bound path
    n = 9
    cyc = Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    res = max_disjoint_star_packing(cyc, 2)
    assert res.exact and res.method == "branch-and-bound"
    assert res.count == 3


def test_star_packing_large_nonforest_flagged():
    n = 50
    g = Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)] + [(0, 25)])
    res = max_disjoint_star_packing(g, 2)
    assert not res.exact and res.method == "greedy-lower-bound"
    assert 0 <= res.count <= n // 3


def test_sphere_packing_constant():
    assert sphere_packing_number(2) == 5
    with pytest.raises(NotImplementedError):
        sphere_packing_number(3)
    assert euclidean_plane_vmin_lower_bound(star_graph(6)).count == 1


def test_tree_center():
    assert tree_center(path_graph(7)) == 3
    assert tree_center(star_graph(5)) == 0


def test_edge_list_roundtrip(tmp_path):
    g = complete_ary_tree(3, 3)
    p = tmp_path / "g.txt"
    write_edge_list(g, p)
    g2 = read_edge_list(p)
    assert g2.vertex_count == g.vertex_count and g2.edges == g.edges
    text = p.read_text()
    assert text.startswith("#")


def test_no_self_loops():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
