"""Contextual linear-bandit replay toolkit for nursing-home care-plan experiments.

Pipeline: synthesize or load a patient cohort, fit a counterfactual
reward model, impute the full reward table, replay LinUCB / LinTS and
baseline policies against it, and report cumulative-regret curves.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .linalg import RidgeState

__all__ = ["KERNEL_BACKEND", "RidgeState", "__version__"]
