"""Probability measures over the couples of an entity set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CoupleMeasure"]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class CoupleMeasure:
    """Probability weights over all_couples(n), canonical order."""

    weights: np.ndarray
    _sorted_cumsum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d array")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_sorted_cumsum", np.concatenate([[0.0], np.cumsum(np.sort(w))]))

    @staticmethod
    def uniform(n_couples: int) -> "CoupleMeasure":
        if n_couples < 1:
            raise ValueError("need at least one couple")
        return CoupleMeasure(np.full(n_couples, 1.0 / n_couples))

    @staticmethod
    def point_mass(n_couples: int, support: list[int]) -> "CoupleMeasure":
        """Uniform on the given couple indices, zero elsewhere."""
        w = np.zeros(n_couples)
        w[support] = 1.0 / len(support)
        return CoupleMeasure(w)

    @staticmethod
    def random(n_couples: int, rng: np.random.Generator, concentration: float = 1.0) -> "CoupleMeasure":
        w = rng.dirichlet(np.full(n_couples, concentration))
        return CoupleMeasure(w / w.sum())

    @property
    def n_couples(self) -> int:
        return self.weights.shape[0]

    def smallest_mass(self, k: int) -> float:
        """Total weight of the k lightest couples (the minimum over all
        size-k couple subsets of their measure)."""
        if not 0 <= k <= self.n_couples:
            raise ValueError(f"k={k} out of range 0..{self.n_couples}")
        return float(self._sorted_cumsum[k])
