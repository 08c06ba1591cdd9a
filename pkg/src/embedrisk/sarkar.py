"""Recursive cone-splitting embedding of trees into the hyperbolic plane.

Every edge is drawn with the same geodesic length `scale`; each vertex
splits its angular cone uniformly among its children and the root uses the
full circle.  Positions are tracked in polar coordinates (r, theta) about
the origin, and all triangle solves use forms without catastrophic
cancellation, so the construction stays accurate far beyond the float64
radius envelope of raw hyperboloid coordinates:

  cosh(r_c) - 1 = 2 sinh^2((r_v - s)/2) + 2 sinh(r_v) sinh(s) sin^2(phi/2)

for a child at distance s from a vertex at radius r_v, leaving at angle phi
from the origin direction.  Pairwise distances come from the analogous
polar form.  The calibration loop searches the smallest edge length whose
embedding satisfies the unit-margin score condition for the tree's labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, all_couples, edge_labels, tree_center
from .spaces import (
    Embedding,
    GFunc,
    GeometryError,
    MarginReport,
    SpaceKind,
    SpaceSpec,
    verify_margin_condition,
)

__all__ = [
    "StructureError",
    "SarkarEmbedding",
    "CalibratedTreeEmbedding",
    "sarkar_tree_embedding",
    "calibrate_tree_embedding",
]

# sinh(r)*sinh(r) must stay below float64 overflow
_POLAR_RADIUS_LIMIT = 350.0


class StructureError(ValueError):
    pass


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def _place_child(r_v: float, theta_v: float, alpha: float, s: float):
    """Place a child at distance s from (r_v, theta_v), leaving at angle
    alpha (measured at the vertex from the direction toward the origin,
    positive toward increasing theta).

    Returns (r_c, theta_c, alpha_back) where alpha_back is the direction
    from the child toward the vertex, in the child's own frame.
    """
    if r_v == 0.0:
        # vertex at the origin: alpha is the absolute polar angle
        return s, _wrap_angle(alpha), 0.0
    phi = abs(_wrap_angle(alpha))
    sgn = 1.0 if _wrap_angle(alpha) >= 0 else -1.0
    sh_r, ch_r = math.sinh(r_v), math.cosh(r_v)
    sh_s, ch_s = math.sinh(s), math.cosh(s)
    half = math.sin(phi / 2.0)
    t_c = 2.0 * math.sinh((r_v - s) / 2.0) ** 2 + 2.0 * sh_r * sh_s * half * half
    r_c = math.log1p(t_c + math.sqrt(t_c * (t_c + 2.0))) if t_c > 1e-8 else math.sqrt(2 * t_c)
    if r_c <= 0.0:
        return 0.0, 0.0, 0.0
    sh_c, ch_c = math.sinh(r_c), math.cosh(r_c)
    # polar-angle offset at the origin and the return angle at the child,
    # each taken from a sine (accurate when small) plus a cosine for the
    # quadrant; the cosines are written with ratios so nothing overflows
    sin_delta = math.sin(phi) * sh_s / sh_c
    cos_delta = (1.0 - ch_s / (ch_r * ch_c)) / (math.tanh(r_v) * math.tanh(r_c))
    delta = math.atan2(min(max(sin_delta, 0.0), 1.0), cos_delta)
    sin_beta = math.sin(phi) * sh_r / sh_c
    cos_beta = (1.0 - ch_r / (ch_s * ch_c)) / (math.tanh(s) * math.tanh(r_c))
    beta = math.atan2(min(max(sin_beta, 0.0), 1.0), cos_beta)
    return r_c, _wrap_angle(theta_v + sgn * delta), -sgn * beta


@dataclass(frozen=True)
class SarkarEmbedding:
    """Tree embedding in polar coordinates about the origin."""

    tree: Graph
    root: int
    scale: float
    polar: np.ndarray  # (n, 2) columns r, theta

    @property
    def radius(self) -> float:
        return float(np.max(self.polar[:, 0]))

    def distance_matrix(self) -> np.ndarray:
        r = self.polar[:, 0]
        th = self.polar[:, 1]
        if np.max(r) > _POLAR_RADIUS_LIMIT:
            raise GeometryError("embedding radius too large for float64 polar distances")
        dr = 0.5 * (r[:, None] - r[None, :])
        cross = np.sinh(r)[:, None] * np.sinh(r)[None, :]
        half_sin = np.sin(0.5 * (th[:, None] - th[None, :]))
        t = np.sinh(dr) ** 2 + cross * half_sin * half_sin
        s = np.sqrt(np.maximum(t, 0.0))
        d = 2.0 * np.arcsinh(s)
        np.fill_diagonal(d, 0.0)
        return d

    def couple_distances(self) -> np.ndarray:
        dm = self.distance_matrix()
        return np.array([dm[u, v] for u, v in all_couples(self.tree.vertex_count)])

    def to_embedding(self, space: SpaceSpec | None = None) -> Embedding:
        """Hyperboloid-coordinate embedding.  Pairwise float64 distances on
        these coordinates are only trustworthy within the radius envelope;
        use couple_distances() for exact values at any radius."""
        if space is None:
            space = self.space()
        if space.kind is not SpaceKind.HYPERBOLIC or space.dim < 2:
            raise ValueError("target space must be hyperbolic with dim >= 2")
        r = self.polar[:, 0]
        th = self.polar[:, 1]
        n = self.tree.vertex_count
        pts = np.zeros((n, space.ambient_dim))
        pts[:, 0] = np.cosh(r)
        pts[:, 1] = np.sinh(r) * np.cos(th)
        pts[:, 2] = np.sinh(r) * np.sin(th)
        return Embedding(space, pts)

    def space(self, dim: int = 2) -> SpaceSpec:
        return SpaceSpec(SpaceKind.HYPERBOLIC, dim, max(self.radius, 1e-9))

    def margin_report(self, g: GFunc, labels: np.ndarray | None = None) -> MarginReport:
        if labels is None:
            labels = edge_labels(self.tree)
        return verify_margin_condition(None, g, labels, distances=self.couple_distances())


def sarkar_tree_embedding(
    tree: Graph, scale: float, dim: int = 2, root: int | None = None
) -> SarkarEmbedding:
    """Embed a tree with uniform edge length `scale` by recursive cone
    splitting; the root (default: a tree center) sits at the origin."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not tree.is_tree():
        raise StructureError("input graph is not a connected acyclic tree")
    n = tree.vertex_count
    if root is None:
        root = tree_center(tree)
    polar = np.zeros((n, 2))
    if n == 1:
        return SarkarEmbedding(tree, root, scale, polar)

    children: dict[int, list[int]] = {}
    parent = {root: -1}
    order = [root]
    idx = 0
    while idx < len(order):
        v = order[idx]
        idx += 1
        kids = [w for w in tree.adjacency(v) if w != parent[v]]
        children[v] = kids
        for w in kids:
            parent[w] = v
            order.append(w)

    # per-vertex placement frame: outward axis and cone half-width
    axis = {root: 0.0}
    halfwidth = {root: math.pi}
    kids = children[root]
    t = len(kids)
    for j, c in enumerate(kids):
        theta_c = 2.0 * math.pi * j / t
        polar[c] = (scale, _wrap_angle(theta_c))
        axis[c] = math.pi  # straight away from the origin
        halfwidth[c] = math.pi / t
    for v in order:
        if v == root:
            continue
        kids = children[v]
        t = len(kids)
        if t == 0:
            continue
        w = halfwidth[v]
        r_v, theta_v = polar[v]
        for j, c in enumerate(kids):
            offset = (-w + (2 * j + 1) * w / t) if t > 1 else 0.0
            alpha = _wrap_angle(axis[v] + offset)
            r_c, theta_c, alpha_back = _place_child(r_v, theta_v, alpha, scale)
            polar[c] = (r_c, theta_c)
            axis[c] = _wrap_angle(alpha_back + math.pi)
            halfwidth[c] = w / t
    return SarkarEmbedding(tree, root, scale, polar)


@dataclass(frozen=True)
class CalibratedTreeEmbedding:
    sarkar: SarkarEmbedding
    gfunc: GFunc
    labels: np.ndarray

    @property
    def scale(self) -> float:
        return self.sarkar.scale

    @property
    def radius(self) -> float:
        return self.sarkar.radius

    def margin_report(self) -> MarginReport:
        return self.sarkar.margin_report(self.gfunc, self.labels)


def _margin_gap(semb: SarkarEmbedding, labels: np.ndarray, q: float):
    """(gap, g(max edge), g(min non-edge)); the margin condition is
    satisfiable with some threshold iff gap >= 2."""
    d = semb.couple_distances()
    pos = labels > 0
    g_edge_max = float(np.max(d[pos] ** q)) if np.any(pos) else 0.0
    g_non_min = float(np.min(d[~pos] ** q)) if np.any(~pos) else math.inf
    return g_non_min - g_edge_max, g_edge_max, g_non_min


def calibrate_tree_embedding(
    tree: Graph,
    exponent: float = 1.0,
    dim: int = 2,
    root: int | None = None,
    scale_max: float = 64.0,
    rel_tol: float = 1e-2,
) -> CalibratedTreeEmbedding:
    """Smallest uniform edge length (doubling search plus bisection) whose
    embedding admits a threshold meeting the unit-margin score condition,
    with the threshold then centered between the edge and non-edge score
    ranges."""
    if not tree.is_tree():
        raise StructureError("input graph is not a connected acyclic tree")
    labels = edge_labels(tree)
    q = float(exponent)

    def build(nu: float) -> SarkarEmbedding:
        return sarkar_tree_embedding(tree, nu, dim=dim, root=root)

    nu = 1.0
    gap, _, _ = _margin_gap(build(nu), labels, q)
    if gap >= 2.0:
        lo = nu / 2.0
        while lo > 1e-6 and _margin_gap(build(lo), labels, q)[0] >= 2.0:
            nu = lo
            lo /= 2.0
        hi = nu
    else:
        while gap < 2.0:
            nu *= 2.0
            if nu > scale_max:
                raise GeometryError(f"no feasible edge length up to {scale_max}")
            gap, _, _ = _margin_gap(build(nu), labels, q)
        lo, hi = nu / 2.0, nu
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        gap_mid, _, _ = _margin_gap(build(mid), labels, q)
        if gap_mid >= 2.0:
            hi = mid
        else:
            lo = mid
    semb = build(hi)
    _, g_edge_max, g_non_min = _margin_gap(semb, labels, q)
    if math.isinf(g_non_min):  # no dissimilar couples at all
        tau_g = g_edge_max + 1.0
    else:
        tau_g = 0.5 * (g_edge_max + g_non_min)
    gfunc = GFunc(exponent=q, space_threshold=tau_g ** (1.0 / q))
    return CalibratedTreeEmbedding(semb, gfunc, labels)
