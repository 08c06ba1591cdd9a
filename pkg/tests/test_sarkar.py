import math

import numpy as np
import pytest

from embedrisk.graphs import (
    Graph,
    all_couples,
    all_pairs_distances,
    complete_ary_tree,
    path_graph,
    random_tree,
    star_graph,
)
from embedrisk.sarkar import (
    StructureError,
    calibrate_tree_embedding,
    sarkar_tree_embedding,
)
from embedrisk.spaces import GFunc, hyperboloid_residual


def test_single_edge():
    t = Graph.from_edges(2, [(0, 1)])
    se = sarkar_tree_embedding(t, 2.0)
    assert se.distance_matrix()[0, 1] == pytest.approx(2.0, rel=1e-12)


def test_star_leaves_mutually_far():
    se = sarkar_tree_embedding(star_graph(5), 6.0, root=0)
    dm = se.distance_matrix()
    for i in range(1, 6):
        assert dm[0, i] == pytest.approx(6.0, rel=1e-10)
        for j in range(i + 1, 6):
            assert dm[i, j] > 6.0


def test_non_tree_rejected():
    cyc = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    with pytest.raises(StructureError):
        sarkar_tree_embedding(cyc, 2.0)
    disconnected = Graph(3, frozenset({(0, 1)}))
    with pytest.raises(StructureError):
        sarkar_tree_embedding(disconnected, 2.0)


@pytest.mark.parametrize("seed,n", [(0, 10), (1, 25), (2, 60)])
def test_edges_have_exact_scale_and_radius_bound(seed, n):
    rng = np.random.default_rng(seed)
    tree = random_tree(n, rng)
    nu = 2.5
    se = sarkar_tree_embedding(tree, nu)
    dm = se.distance_matrix()
    # theta offsets shrink like e^-r, so reconstruction error grows mildly
    # with depth; 3e-8 relative is ample for unit-margin checks
    for (u, v) in tree.edges:
        assert dm[u, v] == pytest.approx(nu, rel=3e-8)
    depth = max(
        all_pairs_distances(tree).value(se.root, v) for v in range(n)
    )
    assert se.radius <= nu * depth + 1e-9


def test_calibrated_binary_tree_no_violations():
    cal = calibrate_tree_embedding(complete_ary_tree(2, 4))
    assert cal.margin_report().count == 0
    # scores sit at least one unit off the threshold on both sides
    d = cal.sarkar.couple_distances()
    scores = cal.gfunc.score(d)
    labels = cal.labels
    assert np.all(scores[labels > 0] >= 1.0)
    assert np.all(scores[labels < 0] <= -1.0)


def test_calibration_minimality():
    cal = calibrate_tree_embedding(complete_ary_tree(2, 4))
    smaller = sarkar_tree_embedding(cal.sarkar.tree, cal.scale * 0.9)
    d = smaller.couple_distances()
    labels = cal.labels
    q = cal.gfunc.exponent
    gap = float(np.min(d[labels < 0] ** q) - np.max(d[labels > 0] ** q))
    assert gap < 2.0  # 10 percent less scale already breaks feasibility


def test_calibrated_exponent_two():
    cal = calibrate_tree_embedding(complete_ary_tree(3, 3), exponent=2.0)
    assert cal.gfunc.exponent == 2.0
    assert cal.margin_report().count == 0


def test_to_embedding_on_manifold():
    cal = calibrate_tree_embedding(complete_ary_tree(2, 4))
    emb = cal.sarkar.to_embedding()
    emb.validate()
    assert np.max(hyperboloid_residual(emb.points)) <= 1e-9
    # embedding coordinate distances agree with polar distances inside the envelope
    if cal.radius <= 12:
        frames = [(u, v) for (u, v) in all_couples(emb.n_entities)]
        dm = cal.sarkar.distance_matrix()
        iu = np.array([c[0] for c in frames])
        jv = np.array([c[1] for c in frames])
        dd = emb.couple_distances(iu, jv)
        assert np.allclose(dd, [dm[u, v] for u, v in frames], rtol=1e-6, atol=1e-8)


def test_deep_path_stays_finite():
    # radius far beyond the float64 coordinate envelope: polar distances
    # still behave (monotone along the path, edges exact)
    tree = path_graph(80)
    se = sarkar_tree_embedding(tree, 4.0, root=0)
    dm = se.distance_matrix()
    assert se.radius == pytest.approx(4.0 * 79, rel=1e-9)
    assert np.isfinite(dm).all()
    for (u, v) in tree.edges:
        assert dm[u, v] == pytest.approx(4.0, rel=1e-9)
    d_ends = dm[0, 79]
    assert d_ends == pytest.approx(4.0 * 79, rel=1e-6)


def test_single_vertex_tree():
    se = sarkar_tree_embedding(Graph(1, frozenset()), 1.0)
    assert se.radius == 0.0
