"""Monte-Carlo estimation of the loss-class Rademacher complexity, an
exact brute-force oracle on tiny grid-restricted instances, and tabulation
of the localized complexity bound.

The Monte-Carlo inner supremum is a multi-restart gradient ascent, so every
estimate is a certified lower estimate of the true complexity: the bound
comparisons estimate <= truth <= bound stay sound."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundInputs, zeta_m
from .learner import DistributionSpec, LossSpec
from .measures import CoupleMeasure
from .optim import CoupleFrame, descend, objective_and_grad, spawn_init, weight_table
from .spaces import GFunc, SpaceKind, SpaceSpec

__all__ = [
    "RcEstimate",
    "RcFailure",
    "rc_monte_carlo",
    "rc_brute_force",
    "sup_signed_risk",
    "exhaustive_sup_signed_risk",
    "grid_loss_matrix",
    "local_rc_bound_table",
    "rc_global_bound",
]


class RcFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RcEstimate:
    mean: float
    std_err: float
    trials: int
    sup_method: str
    dropped: int = 0
    values: tuple = ()

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be >= 0")


def rc_global_bound(lip_L: float, lambda_sq: float, sample_size: float) -> float:
    """Distribution-free complexity bound 2 L Lam sqrt(2/S)."""
    return 2.0 * lip_L * math.sqrt(lambda_sq) * math.sqrt(2.0 / sample_size)


def rc_monte_carlo(
    dist: DistributionSpec,
    space: SpaceSpec,
    g: GFunc,
    loss: LossSpec,
    sample_size: int,
    trials: int,
    restarts: int = 8,
    steps: int = 150,
    seed: int = 0,
    local_r: float | None = None,
) -> RcEstimate:
    """Estimate E sup_h (1/S) sum_s sigma_s loss(y_s, h(x_s)).

    Per trial a dataset and sign vector are drawn from per-trial RNG
    streams, and the signed empirical sum is ascended over embeddings
    (all trials and restarts run as one batch).  With local_r set, restart
    solutions whose exact excess risk exceeds local_r are rejected, which
    restricts the class to the excess-risk ball of that radius.
    """
    if trials < 30:
        raise ValueError("need at least 30 trials")
    n = dist.n_entities
    frame = CoupleFrame.for_entities(n)
    master = np.random.SeedSequence(seed)
    trial_seqs = master.spawn(trials + 1)
    weights = np.empty((trials, frame.n_couples, 2))
    for t in range(trials):
        rng = np.random.default_rng(trial_seqs[t])
        idx = rng.choice(dist.n_couples, size=sample_size, p=dist.mu.weights)
        labels = np.where(rng.random(sample_size) < dist.eta[idx], 1, -1)
        signs = rng.choice([-1.0, 1.0], size=sample_size)
        weights[t] = weight_table(frame.n_couples, idx, labels, signs=signs)
    batch_w = np.repeat(weights, restarts, axis=0)
    init = spawn_init(space, n, trials * restarts, trial_seqs[trials], radius_frac=0.9)
    step0 = 0.1 * space.radius
    vals, pts = descend(
        space, g, frame, batch_w, init, steps, step0, loss.clip_m, maximize=True
    )
    vals = vals.reshape(trials, restarts)
    if local_r is not None:
        excess = _batch_excess(dist, space, g, loss, frame, pts).reshape(trials, restarts)
        rejected = excess > local_r
        # keep the lowest-excess restart when the whole trial is rejected
        all_gone = np.all(rejected, axis=1)
        keep_anyway = np.argmin(excess, axis=1)
        rejected[np.arange(trials)[all_gone], keep_anyway[all_gone]] = False
        vals = np.where(rejected, -np.inf, vals)
    sup_vals = np.max(vals, axis=1)
    finite = np.isfinite(sup_vals)
    dropped = int(np.sum(~finite))
    if dropped > 0.1 * trials:
        raise RcFailure(f"{dropped}/{trials} trials dropped")
    sup_vals = sup_vals[finite]
    mean = float(np.mean(sup_vals))
    std_err = float(np.std(sup_vals, ddof=1) / math.sqrt(len(sup_vals)))
    return RcEstimate(
        mean, std_err, len(sup_vals), "gradient_ascent", dropped, tuple(map(float, sup_vals))
    )


def _batch_excess(dist, space, g, loss, frame, points) -> np.ndarray:
    """Exact clipped excess risk of each embedding in a batch."""
    from .spaces import pairwise_couple_distances

    d = pairwise_couple_distances(space, points, frame.iu, frame.jv)
    s = np.clip(g.score(d), -loss.clip_m, loss.clip_m)
    lp = np.maximum(1.0 - s, 0.0)
    ln = np.maximum(1.0 + s, 0.0)
    mu = dist.mu.weights
    eta = dist.eta
    clipped = np.sum(mu * (eta * lp + (1 - eta) * ln), axis=-1)
    bayes = float(np.sum(mu * (1.0 - min(loss.clip_m, 1.0) * np.abs(2 * eta - 1))))
    return clipped - bayes


# ----------------------------------------------------------------------
# Tiny-instance oracle
# ----------------------------------------------------------------------


def _grid_embeddings(grid: np.ndarray, n_entities: int) -> np.ndarray:
    """(G^n, n, 1) array of all grid configurations."""
    g = len(grid)
    if g**n_entities > 100_000:
        raise ValueError(f"grid budget exceeded: {g}^{n_entities} > 1e5")
    mesh = np.meshgrid(*([grid] * n_entities), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)[..., None]


def _loss_matrix(points: np.ndarray, g: GFunc, loss: LossSpec, frame: CoupleFrame) -> np.ndarray:
    """(n_embeddings, 2 * n_couples) losses; column 2k is (couple k, +1)."""
    d = np.abs(points[:, frame.iu, 0] - points[:, frame.jv, 0])
    s = np.clip(g.score(d), -loss.clip_m, loss.clip_m)
    out = np.empty((points.shape[0], 2 * frame.n_couples))
    out[:, 0::2] = np.maximum(1.0 - s, 0.0)
    out[:, 1::2] = np.maximum(1.0 + s, 0.0)
    return out


def rc_brute_force(
    grid: np.ndarray,
    dist: DistributionSpec,
    g: GFunc,
    loss: LossSpec,
    sample_size: int,
    data_enum_limit: int = 10_000,
    data_trials: int = 200,
    seed: int = 0,
) -> RcEstimate:
    """Ground-truth Rademacher complexity of the 1-d Euclidean class
    restricted to a coordinate grid, for up to 3 entities and tiny S.

    The supremum is an exhaustive maximum over every grid configuration and
    the expectation over signs is exact (all 2^S patterns).  The data
    expectation is exact when the number of (couple, label) tuples is within
    `data_enum_limit`, otherwise Monte-Carlo over datasets.
    """
    n = dist.n_entities
    if n > 3:
        raise ValueError("brute force supports at most 3 entities")
    if sample_size > 4:
        raise ValueError("brute force supports sample sizes up to 4")
    grid = np.asarray(grid, dtype=float)
    frame = CoupleFrame.for_entities(n)
    pts = _grid_embeddings(grid, n)
    lmat = _loss_matrix(pts, g, loss, frame)

    # atom probabilities over (couple, label) pairs, matching lmat columns
    atom_p = np.empty(2 * frame.n_couples)
    atom_p[0::2] = dist.mu.weights * dist.eta
    atom_p[1::2] = dist.mu.weights * (1.0 - dist.eta)
    atoms = np.arange(2 * frame.n_couples)
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=sample_size)))

    def sign_averaged_sup(tuple_atoms: np.ndarray) -> float:
        # weight vectors for every sign pattern at once
        w = np.zeros((len(signs), 2 * frame.n_couples))
        for s_pos in range(sample_size):
            np.add.at(w, (np.arange(len(signs)), tuple_atoms[s_pos]), signs[:, s_pos])
        sups = np.max(lmat @ w.T, axis=0) / sample_size
        return float(np.mean(sups))

    n_tuples = (2 * frame.n_couples) ** sample_size
    if n_tuples <= data_enum_limit:
        total = 0.0
        for tup in itertools.product(atoms, repeat=sample_size):
            p = float(np.prod(atom_p[list(tup)]))
            if p == 0.0:
                continue
            total += p * sign_averaged_sup(np.array(tup))
        return RcEstimate(total, 0.0, n_tuples, "exhaustive")
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(data_trials):
        tup = rng.choice(atoms, size=sample_size, p=atom_p / atom_p.sum())
        vals.append(sign_averaged_sup(tup))
    vals = np.array(vals)
    return RcEstimate(
        float(np.mean(vals)),
        float(np.std(vals, ddof=1) / math.sqrt(len(vals))),
        data_trials,
        "exhaustive",
    )


def exhaustive_sup_signed_risk(
    grid: np.ndarray,
    n_entities: int,
    g: GFunc,
    loss: LossSpec,
    couple_idx: np.ndarray,
    labels: np.ndarray,
    signs: np.ndarray,
    loss_matrix: np.ndarray | None = None,
) -> float:
    """Exact sup of the signed empirical sum over the grid-restricted 1-d
    Euclidean class, for one fixed dataset and sign vector.  Pass a cached
    `loss_matrix` (from grid_loss_matrix) to amortize repeated calls."""
    frame = CoupleFrame.for_entities(n_entities)
    if loss_matrix is None:
        loss_matrix = grid_loss_matrix(grid, n_entities, g, loss)
    w = np.zeros(2 * frame.n_couples)
    cols = 2 * np.asarray(couple_idx, dtype=int) + (np.asarray(labels) < 0).astype(int)
    np.add.at(w, cols, np.asarray(signs, dtype=float))
    return float(np.max(loss_matrix @ w)) / len(couple_idx)


def grid_loss_matrix(
    grid: np.ndarray, n_entities: int, g: GFunc, loss: LossSpec
) -> np.ndarray:
    """Losses of every grid configuration at every (couple, label) atom."""
    frame = CoupleFrame.for_entities(n_entities)
    pts = _grid_embeddings(np.asarray(grid, dtype=float), n_entities)
    return _loss_matrix(pts, g, loss, frame)


def sup_signed_risk(
    space: SpaceSpec,
    g: GFunc,
    loss: LossSpec,
    n_entities: int,
    couple_idx: np.ndarray,
    labels: np.ndarray,
    signs: np.ndarray,
    restarts: int = 8,
    steps: int = 150,
    seed: int = 0,
    snap_grid: np.ndarray | None = None,
) -> float:
    """Gradient-ascent estimate of sup_h (1/S) sum_s sigma_s loss(y_s, h(x_s))
    for one fixed dataset and sign vector.

    With snap_grid (1-d Euclidean only) the ascent endpoints are snapped to
    the grid and refined by discrete coordinate ascent, so the value is a
    member of the same grid-restricted class an exhaustive oracle searches.
    """
    n = n_entities
    frame = CoupleFrame.for_entities(n)
    w = weight_table(frame.n_couples, couple_idx, labels, signs=signs)
    init = spawn_init(space, n, restarts, np.random.SeedSequence(seed), radius_frac=0.9)
    vals, pts = descend(
        space, g, frame, w, init, steps, 0.1 * space.radius, loss.clip_m, maximize=True
    )
    if snap_grid is None:
        return float(np.max(vals))
    best = -math.inf
    for k in range(restarts):
        snapped = _snap_and_climb(pts[k, :, 0], snap_grid, g, loss, frame, w)
        best = max(best, snapped)
    return best


def _grid_value(x: np.ndarray, g, loss, frame, w) -> float:
    d = np.abs(x[frame.iu] - x[frame.jv])
    s = np.clip(g.score(d), -loss.clip_m, loss.clip_m)
    return float(
        np.sum(w[:, 0] * np.maximum(1.0 - s, 0.0) + w[:, 1] * np.maximum(1.0 + s, 0.0))
    )


def _snap_and_climb(x: np.ndarray, grid: np.ndarray, g, loss, frame, w) -> float:
    idx = np.array([int(np.argmin(np.abs(grid - xi))) for xi in x])
    best = _grid_value(grid[idx], g, loss, frame, w)
    improved = True
    guard = 0
    while improved and guard < 200:
        improved = False
        guard += 1
        for i in range(len(idx)):
            for step in (-1, 1):
                j = idx[i] + step
                if not 0 <= j < len(grid):
                    continue
                trial = idx.copy()
                trial[i] = j
                v = _grid_value(grid[trial], g, loss, frame, w)
                if v > best + 1e-15:
                    best, idx, improved = v, trial, True
    return best


# ----------------------------------------------------------------------
# Localized bound table
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LocalBoundRow:
    r: float
    best_m: int
    bound: float


def local_rc_bound_table(
    inputs: BoundInputs,
    mu: CoupleMeasure,
    r_grid,
    sample_size: float,
) -> list[LocalBoundRow]:
    """For each localization radius r, the minimizing m and the bound
    min_m zeta_m(r) / sqrt(S); the r = inf row reduces to the global
    2 L Lam sqrt(2/S)."""
    rows = []
    n = mu.n_couples
    sqrt_s = math.sqrt(sample_size)
    for r in r_grid:
        vals = {m: zeta_m(r, m, inputs, mu) / sqrt_s for m in range(n + 1)}
        best_m = min(vals, key=lambda m: (vals[m], m))
        rows.append(LocalBoundRow(float(r), best_m, vals[best_m]))
    return rows
