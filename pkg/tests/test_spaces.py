import math

import mpmath
import numpy as np
import pytest

from embedrisk.graphs import all_couples
from embedrisk.spaces import (
    Embedding,
    GeometryError,
    GFunc,
    SpaceKind,
    SpaceSpec,
    distance,
    distance_to_origin,
    exp_map,
    hyperboloid_residual,
    lift_to_hyperboloid,
    load_embedding_csv,
    lorentz_inner,
    polygon_side_length,
    project_to_ball,
    random_ball_points,
    riemannian_step,
    save_embedding_csv,
    verify_margin_condition,
)

E2 = SpaceSpec(SpaceKind.EUCLIDEAN, 2, 10.0)
H2 = SpaceSpec(SpaceKind.HYPERBOLIC, 2, 5.0)


def _hyp_point(r, theta=0.0, dim=2):
    p = np.zeros(dim + 1)
    p[0] = math.cosh(r)
    p[1] = math.sinh(r) * math.cos(theta)
    p[2] = math.sinh(r) * math.sin(theta)
    return p


def test_distance_examples():
    assert distance(E2, np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(5.0)
    x = _hyp_point(1.3, 0.4)
    assert distance(H2, x, x) == 0.0
    a = np.array([math.cosh(1), math.sinh(1), 0.0])
    b = np.array([math.cosh(1), -math.sinh(1), 0.0])
    assert distance(H2, a, b) == pytest.approx(2.0, abs=1e-12)


def test_distance_off_manifold_error():
    bad = np.array([1.5, 0.1, 0.0])
    with pytest.raises(GeometryError):
        distance(H2, bad, _hyp_point(1.0))


def test_distance_small_separation_accuracy():
    # series branch of acosh(1 + t): compare against mpmath at high precision
    mpmath.mp.dps = 60
    for r, eps in [(0.5, 1e-5), (3.0, 1e-6), (5.0, 1e-4)]:
        a = _hyp_point(r)
        b = _hyp_point(r + eps)
        d = float(distance(H2, a, b))
        assert d == pytest.approx(eps, rel=1e-7)


def test_project_to_ball():
    e1 = SpaceSpec(SpaceKind.EUCLIDEAN, 2, 1.0)
    assert np.allclose(project_to_ball(e1, np.array([2.0, 0.0])), [1.0, 0.0])
    inside = np.array([0.3, -0.2])
    assert np.array_equal(project_to_ball(e1, inside), inside)
    h1 = SpaceSpec(SpaceKind.HYPERBOLIC, 2, 1.0)
    far = _hyp_point(3.0, 0.7)
    proj = project_to_ball(h1, far)
    assert distance_to_origin(h1, proj) == pytest.approx(1.0, abs=1e-9)
    # same direction
    assert math.atan2(proj[2], proj[1]) == pytest.approx(0.7)


def test_riemannian_step_examples():
    x = _hyp_point(0.8, 0.1)
    assert np.allclose(riemannian_step(H2, x, np.zeros(3), 0.1), x)
    e = SpaceSpec(SpaceKind.EUCLIDEAN, 2, 5.0)
    out = riemannian_step(e, np.array([0.0, 0.0]), np.array([1.0, 0.0]), 0.1)
    assert np.allclose(out, [-0.1, 0.0])
    stepped = riemannian_step(H2, x, np.array([0.3, -0.8, 0.4]), 0.05)
    assert hyperboloid_residual(stepped) <= 1e-9


def test_residual_through_many_steps():
    rng = np.random.default_rng(5)
    x = _hyp_point(2.0, 0.3)
    for _ in range(10_000):
        grad = rng.normal(size=3)
        x = riemannian_step(H2, x, grad, 0.01)
    assert hyperboloid_residual(x) <= 1e-9
    assert distance_to_origin(H2, x) <= H2.radius + 1e-9


@pytest.mark.parametrize("space", [E2, H2])
def test_distance_symmetry_triangle_and_diameter(space):
    rng = np.random.default_rng(17)
    pts = random_ball_points(space, 60, rng)
    for _ in range(300):
        i, j, k = rng.integers(0, 60, size=3)
        dij = float(distance(space, pts[i], pts[j], validate=False))
        dji = float(distance(space, pts[j], pts[i], validate=False))
        dik = float(distance(space, pts[i], pts[k], validate=False))
        dkj = float(distance(space, pts[k], pts[j], validate=False))
        assert dij == pytest.approx(dji, abs=1e-8)
        assert dij <= dik + dkj + 1e-8
        assert dij <= 2 * space.radius + 1e-8


def test_exp_map_preserves_manifold_and_length():
    x = _hyp_point(1.0, 0.2)
    v = np.array([0.0, 0.1, 0.6])
    v = v + lorentz_inner(x, v) * x  # tangent projection
    y = exp_map(x, v)
    assert hyperboloid_residual(y) <= 1e-9
    speed = math.sqrt(max(lorentz_inner(v, v), 0.0))
    assert distance(H2, x, lift_to_hyperboloid(y)) == pytest.approx(speed, rel=1e-9)


def test_polygon_side_length():
    mpmath.mp.dps = 60
    val = polygon_side_length(156, 50.0)
    oracle = float(2 * mpmath.asinh(mpmath.sin(mpmath.pi / 156) * mpmath.sinh(50)))
    assert val == pytest.approx(oracle, rel=1e-10)
    assert val / 100.0 == pytest.approx(0.9219, abs=1e-3)
    # monotone decreasing in n
    sides = [polygon_side_length(n, 3.0) for n in (3, 4, 8, 20, 100, 1000)]
    assert all(a > b for a, b in zip(sides, sides[1:]))
    # ratio increasing in R and approaching 1
    ratios = [polygon_side_length(156, r) / (2 * r) for r in (5, 10, 20, 50, 100, 5000)]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.999


def test_margin_condition_reports():
    n = 4
    couples = all_couples(n)
    labels = np.array([1, -1, -1, -1, -1, 1])
    g = GFunc(1.0, 1.0)
    # all points identical: every dissimilar couple violates (score tau^q)
    emb = Embedding(E2, np.zeros((n, 2)))
    rep = verify_margin_condition(emb, g, labels)
    assert rep.count == int(np.sum(labels < 0))
    assert all(labels[couples.index(c)] < 0 for c in rep.violations)
    # met by construction: two points, similar, g(d) <= g(tau) - 1
    g2 = GFunc(1.0, 2.0)
    emb2 = Embedding(E2, np.array([[0.0, 0.0], [1.0, 0.0]]))
    rep2 = verify_margin_condition(emb2, g2, np.array([1]))
    assert rep2.count == 0


def test_embedding_validation():
    emb = Embedding(E2, np.array([[11.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(GeometryError):
        emb.validate()
    ok = Embedding(H2, np.stack([_hyp_point(1.0), _hyp_point(4.9, 2.0)]))
    ok.validate()


def test_random_ball_points_properties():
    rng = np.random.default_rng(23)
    for space in (E2, H2, SpaceSpec(SpaceKind.HYPERBOLIC, 4, 3.0)):
        pts = random_ball_points(space, 500, rng, radius=0.5 * space.radius)
        d0 = distance_to_origin(space, pts)
        assert np.max(d0) <= 0.5 * space.radius + 1e-9
        if space.kind is SpaceKind.HYPERBOLIC:
            assert np.max(hyperboloid_residual(pts)) <= 1e-9


def test_embedding_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    emb = Embedding(H2, random_ball_points(H2, 7, rng))
    p = tmp_path / "emb.csv"
    save_embedding_csv(emb, p)
    emb2 = load_embedding_csv(p, H2)
    assert np.allclose(emb.points, emb2.points, rtol=0, atol=0)
    header = p.read_text().splitlines()[0]
    assert header.startswith("entity,coord0")
