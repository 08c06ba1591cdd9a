"""Batched projected gradient descent for weighted margin losses.

Everything downstream (risk minimization, signed Rademacher sups) reduces
to optimizing

    F(points) = sum_c  W[c, +1] * hinge(+clip(s_c)) + W[c, -1] * hinge(-clip(s_c))

over embeddings, where s_c is the couple score and W is an arbitrary real
weight table: empirical label counts / S for training, sign-weighted counts
for Rademacher sups.  The optimizer runs many restarts (and many trials) as
one leading batch axis, which is what keeps the Monte-Carlo experiments
fast in numpy.

Subgradient conventions: the hinge kink and the clip boundary both use the
zero branch, so steps stay conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import all_couples
from .spaces import (
    GFunc,
    OptimizerError,
    SpaceKind,
    SpaceSpec,
    acosh_one_plus,
    lift_to_hyperboloid,
    lorentz_inner,
    project_to_ball,
    random_ball_points,
    tangent_project,
)

__all__ = ["CoupleFrame", "weight_table", "objective_and_grad", "descend", "OptimizerError"]


@dataclass(frozen=True)
class CoupleFrame:
    """Canonical couple indexing plus scatter matrices for n entities."""

    n: int
    iu: np.ndarray
    jv: np.ndarray
    onehot_u: np.ndarray  # (n, n_couples)
    onehot_v: np.ndarray

    @staticmethod
    def for_entities(n: int) -> "CoupleFrame":
        couples = all_couples(n)
        iu = np.array([c[0] for c in couples], dtype=int)
        jv = np.array([c[1] for c in couples], dtype=int)
        c = len(couples)
        ou = np.zeros((n, c))
        ov = np.zeros((n, c))
        ou[iu, np.arange(c)] = 1.0
        ov[jv, np.arange(c)] = 1.0
        return CoupleFrame(n, iu, jv, ou, ov)

    @property
    def n_couples(self) -> int:
        return self.iu.shape[0]


def weight_table(
    n_couples: int,
    couple_idx: np.ndarray,
    labels: np.ndarray,
    signs: np.ndarray | None = None,
) -> np.ndarray:
    """(n_couples, 2) table of per-(couple, label) weights, averaging over
    the sample; column 0 is label +1.  With `signs` each item contributes
    its Rademacher sign instead of +1."""
    couple_idx = np.asarray(couple_idx, dtype=int)
    labels = np.asarray(labels, dtype=int)
    s = couple_idx.shape[0]
    contrib = np.ones(s) if signs is None else np.asarray(signs, dtype=float)
    w = np.zeros((n_couples, 2))
    np.add.at(w, (couple_idx, (labels < 0).astype(int)), contrib / s)
    return w


def objective_and_grad(
    space: SpaceSpec,
    g: GFunc,
    frame: CoupleFrame,
    points: np.ndarray,
    weights: np.ndarray,
    clip_m: float,
    want_grad: bool = True,
):
    """Objective value (per batch element) and ambient gradient.

    points  (..., n, ambient)
    weights (n_couples, 2) or broadcastable (..., n_couples, 2)
    """
    a = points[..., frame.iu, :]
    b = points[..., frame.jv, :]
    if space.kind is SpaceKind.EUCLIDEAN:
        diff = a - b
        d = np.linalg.norm(diff, axis=-1)
    else:
        delta = a - b
        t_l = np.maximum(lorentz_inner(delta, delta), 0.0) * 0.5
        d = acosh_one_plus(t_l)
    s = g.score(d)
    t = np.clip(s, -clip_m, clip_m)
    loss_pos = np.maximum(1.0 - t, 0.0)
    loss_neg = np.maximum(1.0 + t, 0.0)
    w_pos = weights[..., 0]
    w_neg = weights[..., 1]
    value = np.sum(w_pos * loss_pos + w_neg * loss_neg, axis=-1)
    if not want_grad:
        return value, None
    # d value / d score, zero branches at the hinge kink and clip boundary
    dv_dt = -w_pos * (t < 1.0) + w_neg * (t > -1.0)
    dv_ds = dv_dt * (np.abs(s) < clip_m)
    dv_dd = dv_ds * (-g.g_prime(np.maximum(d, 0.0)))
    if space.kind is SpaceKind.EUCLIDEAN:
        unit = diff / np.maximum(d, 1e-300)[..., None]
        contrib_a = dv_dd[..., None] * unit
        contrib_b = -contrib_a
    else:
        denom = np.sqrt(np.maximum(t_l * (t_l + 2.0), 0.0))
        coef = dv_dd / np.maximum(denom, 1e-300)
        coef = np.where(denom > 0, coef, 0.0)
        mb = np.concatenate([b[..., :1], -b[..., 1:]], axis=-1)
        ma = np.concatenate([a[..., :1], -a[..., 1:]], axis=-1)
        contrib_a = coef[..., None] * mb
        contrib_b = coef[..., None] * ma
    grad = np.einsum("nc,...ce->...ne", frame.onehot_u, contrib_a)
    grad += np.einsum("nc,...ce->...ne", frame.onehot_v, contrib_b)
    return value, grad


def _step_batch(
    space: SpaceSpec, points: np.ndarray, grad: np.ndarray, step: float, normalize: bool = True
) -> np.ndarray:
    """One projected step.  With normalize=True the move has length `step`
    (subgradient method with predetermined step lengths: scale-free for the
    piecewise-linear objectives here, whose gradient magnitudes carry no
    curvature information)."""
    if space.kind is SpaceKind.EUCLIDEAN:
        if normalize:
            gn = np.sqrt(np.sum(grad * grad, axis=(-2, -1), keepdims=True))
            grad = grad / np.maximum(gn, 1e-300) * np.where(gn > 0, 1.0, 0.0)
        return project_to_ball(space, points - step * grad)
    rg = np.array(grad, copy=True)
    rg[..., 0] = -rg[..., 0]
    rg = tangent_project(points, rg)
    if normalize:
        gn = np.sqrt(np.sum(np.maximum(lorentz_inner(rg, rg), 0.0), axis=-1))[..., None, None]
        rg = rg / np.maximum(gn, 1e-300) * np.where(gn > 0, 1.0, 0.0)
    w = -step * rg
    nrm = np.sqrt(np.maximum(lorentz_inner(w, w), 0.0))
    # trust region: a move past the ball diameter lands outside and gets
    # projected back anyway, and uncapped moves overflow cosh
    cap = 4.0 * space.radius
    scale = np.where(nrm > cap, cap / np.maximum(nrm, 1e-300), 1.0)
    w = w * scale[..., None]
    nrm = np.minimum(nrm, cap)
    nrm_safe = np.maximum(nrm, 1e-300)
    moved = np.cosh(nrm)[..., None] * points + (np.sinh(nrm) / nrm_safe)[..., None] * w
    moved = np.where(nrm[..., None] > 0, moved, points)
    moved = lift_to_hyperboloid(moved)
    return project_to_ball(space, moved)


def descend(
    space: SpaceSpec,
    g: GFunc,
    frame: CoupleFrame,
    weights: np.ndarray,
    init_points: np.ndarray,
    steps: int,
    step0: float,
    clip_m: float,
    maximize: bool = False,
):
    """Projected (Riemannian) gradient descent with eta_t = step0/sqrt(1+t).

    Returns (best_values, best_points) where best is tracked per batch
    element over all iterates (including the start).  With maximize=True
    the objective is ascended and `best` means largest.
    """
    points = np.array(init_points, dtype=float)
    sgn = -1.0 if maximize else 1.0
    value, grad = objective_and_grad(space, g, frame, points, weights, clip_m)
    best_vals = np.array(value, copy=True)
    best_pts = np.array(points, copy=True)
    for it in range(steps):
        if not np.all(np.isfinite(grad)):
            raise OptimizerError(f"non-finite gradient at step {it}")
        points = _step_batch(space, points, sgn * grad, step0 / math.sqrt(1.0 + it))
        value, grad = objective_and_grad(space, g, frame, points, weights, clip_m)
        improved = (value > best_vals) if maximize else (value < best_vals)
        if np.any(improved):
            best_vals = np.where(improved, value, best_vals)
            best_pts = np.where(improved[..., None, None], points, best_pts)
    if not np.all(np.isfinite(best_vals)):
        raise OptimizerError("non-finite objective after descent")
    return best_vals, best_pts


def spawn_init(
    space: SpaceSpec,
    n_entities: int,
    batch: int,
    seed_seq: np.random.SeedSequence,
    radius_frac: float = 0.5,
) -> np.ndarray:
    """Independent uniform-in-ball initializations, one RNG stream per batch
    element, derived from the master seed by SeedSequence.spawn."""
    children = seed_seq.spawn(batch)
    out = np.empty((batch, n_entities, space.ambient_dim))
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        out[k] = random_ball_points(space, n_entities, rng, radius=radius_frac * space.radius)
    return out
