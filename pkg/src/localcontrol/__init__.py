"""Local-control analysis of cross-sectional observational data.

Pipeline: embed confounders into whitened principal coordinates, cluster
units hierarchically, compute within-cluster rank-correlation effect
sizes, confirm them against random pseudo-clusterings with a permutation
KS test, explore the variance-bias trade-off across cluster counts, and
reveal covariate effects with a regression forest and a linear-model tree.
"""

__version__ = "0.1.0"

from ._backend import BACKEND

__all__ = ["BACKEND", "__version__"]
