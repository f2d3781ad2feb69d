"""Context-vector construction for the bandit policies.

Two layouts are supported: main effects (standardized observed covariates
followed by the 20 mask bits, d = 25) and interactions (the same plus the
covariate-major outer product of the standardized covariates with the
mask bits, d = 125).  Mask bits stay raw {0, 1}; covariates are z-scored
against cohort statistics so the ridge penalty treats coordinates evenly.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .domain import N_INTERVENTIONS, OBSERVED_COVARIATES, mask_bits
from .errors import ConfigurationError

N_OBSERVED = len(OBSERVED_COVARIATES)


class Variant(enum.Enum):
    MAIN_EFFECTS = "main"
    INTERACTIONS = "interactions"

    @classmethod
    def parse(cls, text):
        for variant in cls:
            if variant.value == str(text).strip().lower():
                return variant
        raise ConfigurationError(f"unknown feature variant {text!r}")


def variant_dim(variant):
    if variant is Variant.MAIN_EFFECTS:
        return N_OBSERVED + N_INTERVENTIONS
    return N_OBSERVED + N_INTERVENTIONS + N_OBSERVED * N_INTERVENTIONS


@dataclass(frozen=True, eq=False)
class FeatureSpec:
    """Frozen feature layout: variant plus per-covariate standardization."""

    variant: Variant
    means: np.ndarray
    sds: np.ndarray

    @property
    def dim(self):
        return variant_dim(self.variant)

    def standardize(self, x_obs):
        return (np.asarray(x_obs, dtype=np.float64) - self.means) / self.sds


def fit_feature_spec(cohort, variant):
    """Compute standardization statistics over the cohort's observed covariates.

    Rejects constant columns (and therefore single-patient cohorts), which
    would make the z-score undefined.
    """
    X = cohort.observed_matrix()
    means = X.mean(axis=0)
    sds = X.std(axis=0)
    for name, sd in zip(OBSERVED_COVARIATES, sds):
        if not sd > 0.0:
            raise ConfigurationError(
                f"observed covariate '{name}' is constant; cannot standardize"
            )
    return FeatureSpec(variant=variant, means=means, sds=sds)


def build_features(spec, x_obs, mask):
    """Context vector for one (observed covariates, mask) pair.

    Layout: [z-scored covariates | mask bits | covariate-major z * bits]
    with the interaction block present only for the interactions variant.
    """
    z = spec.standardize(x_obs)
    bits = mask_bits(mask)
    if spec.variant is Variant.MAIN_EFFECTS:
        return np.concatenate([z, bits])
    return np.concatenate([z, bits, np.outer(z, bits).ravel()])


def build_action_features(spec, x_obs, masks):
    """(n_actions, dim) feature matrix for one patient over candidate masks."""
    z = spec.standardize(x_obs)
    bits = np.stack([mask_bits(m) for m in masks])
    n = bits.shape[0]
    zs = np.broadcast_to(z, (n, N_OBSERVED))
    if spec.variant is Variant.MAIN_EFFECTS:
        return np.ascontiguousarray(np.hstack([zs, bits]))
    inter = (z[:, None] * bits[:, None, :]).reshape(n, N_OBSERVED * N_INTERVENTIONS)
    return np.ascontiguousarray(np.hstack([zs, bits, inter]))
