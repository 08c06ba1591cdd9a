"""Couple-label data generation, clipped hinge risks and CERM training."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import all_couples, edge_labels
from .measures import CoupleMeasure
from .optim import CoupleFrame, descend, objective_and_grad, spawn_init, weight_table
from .spaces import Embedding, GFunc, SpaceSpec

__all__ = [
    "LossSpec",
    "DistributionSpec",
    "Dataset",
    "RiskReport",
    "CermResult",
    "clipped_hinge",
    "sample_dataset",
    "risks_exact",
    "empirical_risk",
    "cerm_train",
    "save_dataset_csv",
    "load_dataset_csv",
]


@dataclass(frozen=True)
class LossSpec:
    """Margin-based loss with clipping; only the hinge is wired."""

    kind: str = "hinge"
    clip_m: float = 1.0

    def __post_init__(self):
        if self.kind != "hinge":
            raise ValueError("only the hinge loss is implemented")
        if self.clip_m <= 0:
            raise ValueError("clip_m must be positive")

    @property
    def sup_bound(self) -> float:
        """Largest loss value on clipped scores, 1 + clip_m for the hinge."""
        return 1.0 + self.clip_m

    @property
    def lipschitz(self) -> float:
        return 1.0


def clipped_hinge(y: int, t: float, clip_m: float = 1.0):
    """max(1 - y * clip(t), 0); clip(t) is the median of {-M, t, M}."""
    tc = np.clip(t, -clip_m, clip_m)
    return np.maximum(1.0 - y * tc, 0.0)


@dataclass(frozen=True)
class DistributionSpec:
    """Couple marginal plus the per-couple posterior of the +1 label."""

    n_entities: int
    mu: CoupleMeasure
    eta: np.ndarray
    margin_xi: float | None = None

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        n_couples = self.n_entities * (self.n_entities - 1) // 2
        if self.mu.n_couples != n_couples or eta.shape != (n_couples,):
            raise ValueError("mu / eta must cover all couples of the entity set")
        if np.any((eta < 0) | (eta > 1)):
            raise ValueError("eta must lie in [0, 1]")
        if self.margin_xi is not None:
            if not np.allclose(np.abs(2 * eta - 1), self.margin_xi, atol=1e-12):
                raise ValueError("margin_xi inconsistent with eta")
        object.__setattr__(self, "eta", eta)

    @staticmethod
    def from_margin(
        labels_or_graph, xi: float, mu: CoupleMeasure | None = None
    ) -> "DistributionSpec":
        """Posterior (1 + xi * y) / 2 from true labels, so every couple has
        label margin |2 eta - 1| = xi."""
        if hasattr(labels_or_graph, "vertex_count"):
            labels = edge_labels(labels_or_graph)
        else:
            labels = np.asarray(labels_or_graph, dtype=int)
        n_couples = labels.shape[0]
        n = int(round((1 + math.sqrt(1 + 8 * n_couples)) / 2))
        if mu is None:
            mu = CoupleMeasure.uniform(n_couples)
        if not 0 <= xi <= 1:
            raise ValueError("xi must lie in [0, 1]")
        eta = 0.5 * (1.0 + xi * labels)
        return DistributionSpec(n, mu, eta, margin_xi=xi)

    @property
    def n_couples(self) -> int:
        return self.mu.n_couples


@dataclass(frozen=True)
class Dataset:
    """Sequence of (couple, label) items with the seed that generated it."""

    n_entities: int
    couple_idx: np.ndarray
    labels: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        ci = np.asarray(self.couple_idx, dtype=int)
        lb = np.asarray(self.labels, dtype=int)
        if ci.shape != lb.shape or ci.ndim != 1 or ci.shape[0] < 1:
            raise ValueError("couple_idx and labels must be equal-length 1-d arrays")
        n_couples = self.n_entities * (self.n_entities - 1) // 2
        if np.any((ci < 0) | (ci >= n_couples)):
            raise ValueError("couple index out of range")
        if not np.all(np.abs(lb) == 1):
            raise ValueError("labels must be +-1")
        object.__setattr__(self, "couple_idx", ci)
        object.__setattr__(self, "labels", lb)

    @property
    def size(self) -> int:
        return self.couple_idx.shape[0]

    def couples(self) -> np.ndarray:
        cs = all_couples(self.n_entities)
        return np.array([cs[k] for k in self.couple_idx], dtype=int)


def sample_dataset(dist: DistributionSpec, size: int, seed: int) -> Dataset:
    """size i.i.d. draws: a couple from mu, then +1 with probability eta."""
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(dist.n_couples, size=size, p=dist.mu.weights)
    labels = np.where(rng.random(size) < dist.eta[idx], 1, -1)
    return Dataset(dist.n_entities, idx, labels, seed=seed)


# ----------------------------------------------------------------------
# Risks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RiskReport:
    expected: float
    clipped_expected: float
    bayes: float
    excess: float


def _couple_scores(emb: Embedding, g: GFunc) -> np.ndarray:
    frame = CoupleFrame.for_entities(emb.n_entities)
    d = emb.couple_distances(frame.iu, frame.jv)
    return g.score(d)


def risks_exact(emb: Embedding, g: GFunc, dist: DistributionSpec, loss: LossSpec) -> RiskReport:
    """Exact expected, clipped-expected, Bayes and excess risks, as finite
    sums over the couple set."""
    if emb.n_entities != dist.n_entities:
        raise ValueError("embedding and distribution disagree on the entity count")
    s = _couple_scores(emb, g)
    mu = dist.mu.weights
    eta = dist.eta

    def expected_of(scores):
        lp = np.maximum(1.0 - scores, 0.0)
        ln = np.maximum(1.0 + scores, 0.0)
        return float(np.sum(mu * (eta * lp + (1 - eta) * ln)))

    expected = expected_of(s)
    clipped = expected_of(np.clip(s, -loss.clip_m, loss.clip_m))
    bayes = float(np.sum(mu * (1.0 - min(loss.clip_m, 1.0) * np.abs(2 * eta - 1))))
    return RiskReport(expected, clipped, bayes, clipped - bayes)


def empirical_risk(
    emb: Embedding, g: GFunc, data: Dataset, loss: LossSpec, clipped: bool = True
) -> float:
    if data.size == 0:
        raise ValueError("empty dataset")
    s = _couple_scores(emb, g)[data.couple_idx]
    if clipped:
        s = np.clip(s, -loss.clip_m, loss.clip_m)
    return float(np.mean(np.maximum(1.0 - data.labels * s, 0.0)))


# ----------------------------------------------------------------------
# CERM training
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CermResult:
    embedding: Embedding
    clipped_risk: float
    eps_hat: float
    restart_risks: np.ndarray
    best_probed_risk: float

    @property
    def best_restart(self) -> int:
        return int(np.argmin(self.restart_risks))


def cerm_train(
    space: SpaceSpec,
    g: GFunc,
    data: Dataset,
    loss: LossSpec = LossSpec(),
    restarts: int = 8,
    steps: int = 300,
    step_size: float | None = None,
    seed: int = 0,
    polish_steps: int = 200,
) -> CermResult:
    """Clipped empirical risk minimization by multi-restart projected
    (Riemannian) gradient descent.

    The returned embedding is the best restart endpoint (ties broken by
    restart index).  An extra fine-step polish run from that endpoint
    probes for a lower optimum; eps_hat is the achieved clipped risk minus
    the best value seen anywhere, an honest-effort certificate that the
    result is an eps_hat-approximate minimizer relative to everything the
    search visited.
    """
    g.check_against(space)
    n = data.n_entities
    frame = CoupleFrame.for_entities(n)
    weights = weight_table(frame.n_couples, data.couple_idx, data.labels)
    step0 = 0.1 * space.radius if step_size is None else step_size
    seed_seq = np.random.SeedSequence(seed)
    init = spawn_init(space, n, restarts, seed_seq, radius_frac=0.5)
    vals, pts = descend(space, g, frame, weights, init, steps, step0, loss.clip_m)
    best = int(np.argmin(vals))  # argmin takes the first minimum: lowest index
    achieved = float(vals[best])
    polish_vals, _ = descend(
        space, g, frame, weights, pts[best][None], polish_steps, step0 / 10.0, loss.clip_m
    )
    best_probed = min(achieved, float(polish_vals[0]))
    emb = Embedding(space, pts[best])
    emb.validate()
    return CermResult(emb, achieved, achieved - best_probed, vals, best_probed)


# ----------------------------------------------------------------------
# Dataset files: CSV u,v,label plus a JSON sidecar with spec and seed
# ----------------------------------------------------------------------


def save_dataset_csv(data: Dataset, path, sidecar_extra: dict | None = None) -> None:
    path = str(path)
    couples = data.couples()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "label"])
        for (u, v), y in zip(couples, data.labels):
            writer.writerow([int(u), int(v), int(y)])
    sidecar = {"n_entities": data.n_entities, "seed": data.seed, "size": data.size}
    if sidecar_extra:
        sidecar.update(sidecar_extra)
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset_csv(path) -> Dataset:
    path = str(path)
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    n = int(sidecar["n_entities"])
    from .graphs import couple_index_map

    cmap = couple_index_map(n)
    idx = []
    labels = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["u", "v", "label"]:
            raise ValueError("not a dataset CSV")
        for rec in reader:
            u, v, y = int(rec[0]), int(rec[1]), int(rec[2])
            idx.append(cmap[(u, v) if u < v else (v, u)])
            labels.append(y)
    return Dataset(n, np.array(idx), np.array(labels), seed=sidecar.get("seed"))
