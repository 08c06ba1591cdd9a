"""Graph embedding in Euclidean and hyperbolic balls, with computable
generalization-error and Rademacher-complexity bounds and the Monte-Carlo
machinery to validate them on desk-scale instances."""

__version__ = "0.1.0"

from . import bounds, graphs, learner, measures, optim, rademacher, sarkar, spaces, xfloat

__all__ = [
    "bounds",
    "graphs",
    "learner",
    "measures",
    "optim",
    "rademacher",
    "sarkar",
    "spaces",
    "xfloat",
    "__version__",
]
