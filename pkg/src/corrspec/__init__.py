"""Correlated Gaussian symmetric random matrices, desk-scale.

Subpackages:

- ``ensembles``: generative matrix models with exact queryable covariance
- ``linear_ensemble``: random linear combinations of sparse coefficient matrices
- ``spectral``: eigenvalues, semicircle comparison, edge statistics
- ``words``: walk words, tree-walk sentence parsing, class enumeration
- ``wick``: pair partitions and exact trace-moment oracles
- ``fluctuations``: spiked model, von Mises decomposition, variance arithmetic
- ``harness``: declarative reproducible Monte Carlo experiments
- ``rng``: counter-based per-replicate random streams
"""

from . import budget, ensembles, fluctuations, linear_ensemble, rng, spectral, wick, words

__all__ = [
    "budget",
    "ensembles",
    "fluctuations",
    "linear_ensemble",
    "rng",
    "spectral",
    "wick",
    "words",
]

__version__ = "0.1.0"
