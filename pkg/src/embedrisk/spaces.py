"""Euclidean and hyperbolic ball geometry.

Hyperbolic points live on the upper sheet of the hyperboloid
-x0^2 + sum x_k^2 = -1 (curvature -1), where distances and tangent algebra
are better behaved for gradient methods than in the Poincare ball.

Numerical policy: the hyperbolic distance is computed from
t = |a - b|_L^2 / 2 = cosh(d) - 1, a sum of non-negative terms with no
catastrophic cancellation, and acosh(1 + t) is evaluated by a square-root
series for tiny t and by log1p otherwise.  Coordinates themselves stay in
plain float64, which is only trustworthy for ball radii up to about 15;
bound formulas that need larger radii go through the log-domain scalars in
xfloat instead of through coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .xfloat import log_sinh

__all__ = [
    "SpaceKind",
    "SpaceSpec",
    "GFunc",
    "Embedding",
    "GeometryError",
    "MarginReport",
    "distance",
    "distance_to_origin",
    "pairwise_couple_distances",
    "project_to_ball",
    "riemannian_step",
    "lift_to_hyperboloid",
    "hyperboloid_residual",
    "lorentz_inner",
    "acosh_one_plus",
    "tangent_project",
    "egrad_to_rgrad",
    "exp_map",
    "polygon_side_length",
    "verify_margin_condition",
    "random_ball_points",
    "save_embedding_csv",
    "load_embedding_csv",
]

MANIFOLD_RTOL = 1e-9
BALL_TOL = 1e-9
# float64 coordinates lose pairwise-distance accuracy beyond this radius
COORDINATE_RADIUS_LIMIT = 15.0


class GeometryError(ValueError):
    pass


class SpaceKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class SpaceSpec:
    """A closed ball of given radius around the origin of the space."""

    kind: SpaceKind
    dim: int
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind is SpaceKind.HYPERBOLIC and self.dim < 2:
            raise ValueError("hyperbolic spaces need dim >= 2")
        if not (0 < self.radius < math.inf):
            raise ValueError("radius must be positive and finite")

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1 if self.kind is SpaceKind.HYPERBOLIC else self.dim

    def origin(self) -> np.ndarray:
        x = np.zeros(self.ambient_dim)
        if self.kind is SpaceKind.HYPERBOLIC:
            x[0] = 1.0
        return x


@dataclass(frozen=True)
class GFunc:
    """Monotone transform g(t) = t**exponent plus the score threshold.

    The score of a couple at embedding distance d is
    g(space_threshold) - g(d): positive scores predict similar."""

    exponent: float = 1.0
    space_threshold: float = 1.0

    def __post_init__(self):
        if self.exponent < 1:
            raise ValueError("exponent must be >= 1")
        if self.space_threshold < 0:
            raise ValueError("space_threshold must be >= 0")

    def g(self, t):
        return np.power(t, self.exponent)

    def g_prime(self, t):
        return self.exponent * np.power(t, self.exponent - 1.0)

    def score(self, d):
        return self.g(self.space_threshold) - self.g(d)

    def check_against(self, space: SpaceSpec) -> None:
        if self.space_threshold > 2 * space.radius:
            raise ValueError(
                f"space_threshold {self.space_threshold} exceeds the ball diameter "
                f"{2 * space.radius}"
            )


# ----------------------------------------------------------------------
# Hyperboloid primitives (all broadcast over leading axes)
# ----------------------------------------------------------------------


def lorentz_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minkowski inner product; equals -1 for a point paired with itself."""
    return np.sum(a[..., 1:] * b[..., 1:], axis=-1) - a[..., 0] * b[..., 0]


def hyperboloid_residual(x: np.ndarray) -> np.ndarray:
    """Relative violation of -x0^2 + sum x_k^2 = -1."""
    res = np.abs(lorentz_inner(x, x) + 1.0)
    return res / np.maximum(1.0, x[..., 0] ** 2)


def lift_to_hyperboloid(spatial_or_point: np.ndarray, has_time: bool = True) -> np.ndarray:
    """Recompute x0 from the spatial part, the canonical renormalization."""
    sp = spatial_or_point[..., 1:] if has_time else spatial_or_point
    x0 = np.sqrt(1.0 + np.sum(sp * sp, axis=-1))
    return np.concatenate([x0[..., None], sp], axis=-1)


def acosh_one_plus(t):
    """acosh(1 + t) for t >= 0, accurate down to t = 0."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-8
    ts = np.where(small, t, 0.0)
    series = np.sqrt(2.0 * ts) * (1.0 - ts / 12.0 + 3.0 * ts * ts / 160.0)
    tl = np.where(small, 1.0, t)
    general = np.log1p(tl + np.sqrt(tl * (tl + 2.0)))
    return np.where(small, series, general)


def _hyperbolic_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    delta = a - b
    t = 0.5 * np.maximum(lorentz_inner(delta, delta), 0.0)
    return acosh_one_plus(t)


def _check_on_manifold(x: np.ndarray, what: str) -> None:
    res = hyperboloid_residual(x)
    if np.any(res > MANIFOLD_RTOL):
        raise GeometryError(f"{what} off the hyperboloid (relative residual {np.max(res):.3e})")


def distance(space: SpaceSpec, a: np.ndarray, b: np.ndarray, validate: bool = True) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if space.kind is SpaceKind.EUCLIDEAN:
        return np.linalg.norm(a - b, axis=-1)
    if validate:
        _check_on_manifold(a, "first point")
        _check_on_manifold(b, "second point")
    return _hyperbolic_distance(a, b)


def distance_to_origin(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if space.kind is SpaceKind.EUCLIDEAN:
        return np.linalg.norm(x, axis=-1)
    return np.arcsinh(np.linalg.norm(x[..., 1:], axis=-1))


def pairwise_couple_distances(
    space: SpaceSpec, points: np.ndarray, iu: np.ndarray, jv: np.ndarray
) -> np.ndarray:
    """Distances of the couples (iu[k], jv[k]); points (..., n, ambient)."""
    a = points[..., iu, :]
    b = points[..., jv, :]
    if space.kind is SpaceKind.EUCLIDEAN:
        return np.linalg.norm(a - b, axis=-1)
    return _hyperbolic_distance(a, b)


def project_to_ball(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    """Radial projection onto the closed ball; identity inside."""
    x = np.asarray(x, dtype=float)
    r = space.radius
    if space.kind is SpaceKind.EUCLIDEAN:
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        scale = np.where(norms > r, r / np.maximum(norms, 1e-300), 1.0)
        return x * scale
    d0 = distance_to_origin(space, x)
    out = np.array(x, copy=True)
    mask = d0 > r
    if np.any(mask):
        sp = x[..., 1:]
        spn = np.linalg.norm(sp, axis=-1, keepdims=True)
        unit = sp / np.maximum(spn, 1e-300)
        proj_sp = math.sinh(r) * unit
        proj = np.concatenate(
            [np.full_like(x[..., :1], math.cosh(r)), proj_sp], axis=-1
        )
        out = np.where(mask[..., None], proj, out)
    return out


def tangent_project(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project an ambient vector onto the tangent space of the hyperboloid at x."""
    return v + lorentz_inner(x, v)[..., None] * x


def egrad_to_rgrad(x: np.ndarray, egrad: np.ndarray) -> np.ndarray:
    """Euclidean ambient gradient to Riemannian gradient: flip the time
    component (inverse Minkowski metric) then project onto the tangent space."""
    g = np.array(egrad, dtype=float, copy=True)
    g[..., 0] = -g[..., 0]
    return tangent_project(x, g)


def exp_map(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Geodesic step from x with tangent vector w."""
    nrm = np.sqrt(np.maximum(lorentz_inner(w, w), 0.0))
    nrm_safe = np.maximum(nrm, 1e-300)
    out = np.cosh(nrm)[..., None] * x + (np.sinh(nrm) / nrm_safe)[..., None] * w
    return np.where(nrm[..., None] > 0, out, x)


class OptimizerError(RuntimeError):
    pass


def riemannian_step(space: SpaceSpec, x: np.ndarray, egrad: np.ndarray, step: float) -> np.ndarray:
    """One projected (Riemannian) descent step with ambient gradient `egrad`."""
    x = np.asarray(x, dtype=float)
    egrad = np.asarray(egrad, dtype=float)
    if not np.all(np.isfinite(egrad)):
        raise OptimizerError("non-finite gradient")
    if step <= 0:
        raise ValueError("step must be positive")
    if space.kind is SpaceKind.EUCLIDEAN:
        return project_to_ball(space, x - step * egrad)
    rgrad = egrad_to_rgrad(x, egrad)
    moved = exp_map(x, -step * rgrad)
    moved = lift_to_hyperboloid(moved)
    return project_to_ball(space, moved)


# ----------------------------------------------------------------------
# Regular polygons and the margin condition
# ----------------------------------------------------------------------


def polygon_side_length(n: int, radius: float) -> float:
    """Side length of the regular hyperbolic n-gon with circumradius `radius`,
    2 * asinh(sin(pi/n) * sinh(radius)), evaluated in the log domain so huge
    radii do not overflow."""
    if n < 3:
        raise ValueError("a polygon needs n >= 3")
    if radius <= 0:
        raise ValueError("radius must be positive")
    log_s = math.log(math.sin(math.pi / n)) + log_sinh(radius)
    if log_s > 20.0:
        # asinh(s) = log(2s) + log((1 + sqrt(1 + s^-2)) / 2); correction ~ s^-2/4
        return 2.0 * (math.log(2.0) + log_s + 0.25 * math.exp(-2.0 * log_s))
    s = math.exp(log_s)
    return 2.0 * math.asinh(s)


@dataclass(frozen=True)
class Embedding:
    """One representation point per entity, inside the ball of the space."""

    space: SpaceSpec
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.space.ambient_dim:
            raise ValueError(
                f"points must be (n_entities, {self.space.ambient_dim}), got {pts.shape}"
            )
        object.__setattr__(self, "points", pts)

    @property
    def n_entities(self) -> int:
        return self.points.shape[0]

    def validate(self) -> None:
        if self.space.kind is SpaceKind.HYPERBOLIC:
            _check_on_manifold(self.points, "embedding point")
        d0 = distance_to_origin(self.space, self.points)
        worst = float(np.max(d0)) if d0.size else 0.0
        if worst > self.space.radius + BALL_TOL:
            raise GeometryError(
                f"point at distance {worst} from origin exceeds radius {self.space.radius}"
            )

    def couple_distances(self, iu: np.ndarray, jv: np.ndarray) -> np.ndarray:
        return pairwise_couple_distances(self.space, self.points, iu, jv)


@dataclass(frozen=True)
class MarginReport:
    violations: tuple
    checked: int

    @property
    def count(self) -> int:
        return len(self.violations)


def verify_margin_condition(
    emb: Embedding | None,
    g: GFunc,
    labels: np.ndarray,
    distances: np.ndarray | None = None,
) -> MarginReport:
    """Couples violating the unit-margin score condition.

    A couple labeled +1 must score >= 1 and a couple labeled -1 must score
    <= -1, where score = g(space_threshold) - g(distance).  Violations are
    counted per couple.  `distances` (aligned with the canonical couple
    order) overrides distances computed from the embedding coordinates;
    pass it when coordinates sit outside the float64 radius envelope.
    """
    from .graphs import all_couples

    labels = np.asarray(labels)
    n_couples = labels.shape[0]
    n = int(round((1 + math.sqrt(1 + 8 * n_couples)) / 2))
    if n * (n - 1) // 2 != n_couples:
        raise ValueError(f"labels length {n_couples} is not a couple count")
    couples = all_couples(n)
    if distances is None:
        if emb is None:
            raise ValueError("need an embedding or explicit distances")
        iu = np.fromiter((c[0] for c in couples), dtype=int)
        jv = np.fromiter((c[1] for c in couples), dtype=int)
        distances = emb.couple_distances(iu, jv)
    scores = g.score(np.asarray(distances, dtype=float))
    bad = np.where(labels > 0, scores < 1.0, scores > -1.0)
    violations = tuple(couples[k] for k in np.nonzero(bad)[0])
    return MarginReport(violations, n_couples)


# ----------------------------------------------------------------------
# Sampling and serialization
# ----------------------------------------------------------------------


def random_ball_points(
    space: SpaceSpec, count: int, rng: np.random.Generator, radius: float | None = None
) -> np.ndarray:
    """Uniform (volume-measure) samples in the ball of the given radius."""
    r = space.radius if radius is None else radius
    if r > space.radius:
        raise ValueError("sampling radius exceeds the space radius")
    if space.kind is SpaceKind.EUCLIDEAN:
        out = np.empty((count, space.dim))
        have = 0
        while have < count:
            cand = rng.uniform(-1.0, 1.0, size=(2 * (count - have) + 8, space.dim))
            keep = cand[np.sum(cand * cand, axis=1) <= 1.0]
            take = min(len(keep), count - have)
            out[have : have + take] = keep[:take]
            have += take
        return out * r
    if r * max(space.dim - 1, 1) > 600:
        raise GeometryError("radius too large for float64 hyperboloid sampling")
    grid = np.linspace(0.0, r, 4097)
    dens = np.sinh(grid) ** (space.dim - 1)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(grid))])
    cdf /= cdf[-1]
    radii = np.interp(rng.random(count), cdf, grid)
    dirs = rng.normal(size=(count, space.dim))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    spatial = np.sinh(radii)[:, None] * dirs
    return np.concatenate([np.cosh(radii)[:, None], spatial], axis=1)


def save_embedding_csv(emb: Embedding, path) -> None:
    """CSV with header entity,coord0,...; hyperbolic rows carry x0 first."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        ncoord = emb.points.shape[1]
        writer.writerow(["entity"] + [f"coord{k}" for k in range(ncoord)])
        for i, row in enumerate(emb.points):
            writer.writerow([i] + [repr(float(v)) for v in row])


def load_embedding_csv(path, space: SpaceSpec) -> Embedding:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "entity":
            raise ValueError("not an embedding CSV")
        for rec in reader:
            rows.append((int(rec[0]), [float(v) for v in rec[1:]]))
    rows.sort()
    pts = np.array([coords for _, coords in rows])
    emb = Embedding(space, pts)
    emb.validate()
    return emb
