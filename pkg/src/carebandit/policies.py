"""Action-selection strategies for replay experiments.

Two learning policies (ridge-based UCB and Thompson sampling) and three
baselines: uniform random, the logged action, and the clairvoyant best
action read from the reward table.  All argmaxes break ties toward the
lowest canonical action index.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import CohortError, ConfigurationError
from .features import Variant, build_action_features, variant_dim
from .linalg import RidgeState


class PolicyKind(enum.Enum):
    LINUCB = "linucb"
    LINTS = "lints"
    RANDOM = "random"
    LOGGED = "logged"
    ORACLE_BEST = "oracle_best"

    @classmethod
    def parse(cls, text):
        for kind in cls:
            if kind.value == str(text).strip().lower():
                return kind
        raise ConfigurationError(f"unknown policy kind {text!r}")


BANDIT_KINDS = (PolicyKind.LINUCB, PolicyKind.LINTS)


@dataclass(frozen=True)
class PolicyConfig:
    """One policy to run: kind, exploration strength, and feature variant.

    ``exploration`` is the UCB width multiplier for LINUCB and the
    posterior scale for LINTS; the baselines ignore it.
    """

    kind: PolicyKind
    exploration: float = 0.3
    lam: float = 1.0
    variant: Variant = Variant.INTERACTIONS
    seed: int = 0

    def __post_init__(self):
        if self.kind is PolicyKind.LINUCB and self.exploration < 0:
            raise ConfigurationError("LinUCB exploration parameter must be >= 0")
        if self.kind is PolicyKind.LINTS and self.exploration <= 0:
            raise ConfigurationError("LinTS exploration parameter must be > 0")
        if self.lam <= 0:
            raise ConfigurationError("ridge penalty must be > 0")

    def label(self):
        if self.kind in BANDIT_KINDS:
            return f"{self.kind.value}[{self.exploration:g}]"
        return self.kind.value


def score_linucb(state, b, alpha):
    """Upper confidence bound: prediction plus alpha confidence widths."""
    return state.predict(b) + alpha * state.confidence_width(b)


class Policy:
    """Base class; subclasses override select and optionally update."""

    needs_features = False

    def __init__(self, config, feature_spec=None, rng=None):
        self.config = config
        self.feature_spec = feature_spec
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)

    def _features(self, record, action_set, features):
        if features is not None:
            return features
        return build_action_features(
            self.feature_spec, record.observed_covariates(), action_set.masks
        )

    def select(self, record, action_set, table, features=None):
        raise NotImplementedError

    def update(self, b, r):
        """Feedback hook; baselines keep no state."""


class _BanditPolicy(Policy):
    needs_features = True

    def __init__(self, config, feature_spec, rng=None):
        if feature_spec is None:
            raise ConfigurationError("bandit policies require a feature spec")
        super().__init__(config, feature_spec, rng)
        if feature_spec.dim != variant_dim(config.variant):
            raise ConfigurationError(
                "feature spec dimension does not match the configured variant"
            )
        self.state = RidgeState(feature_spec.dim, lam=config.lam)

    def update(self, b, r):
        self.state.update(b, r)


class LinUCBPolicy(_BanditPolicy):
    def select(self, record, action_set, table, features=None):
        phi = self._features(record, action_set, features)
        scores = self.state.ucb_scores(phi, self.config.exploration)
        return int(np.argmax(scores))


class LinTSPolicy(_BanditPolicy):
    def select(self, record, action_set, table, features=None):
        phi = self._features(record, action_set, features)
        mu_tilde = self.state.sample_coefficients(self.config.exploration, self.rng)
        return int(np.argmax(phi @ mu_tilde))


class RandomPolicy(Policy):
    def select(self, record, action_set, table, features=None):
        return int(self.rng.integers(0, len(action_set)))


class LoggedPolicy(Policy):
    def select(self, record, action_set, table, features=None):
        try:
            return action_set.index_of(record.intervention_mask)
        except ValueError:
            raise CohortError(
                f"logged mask {record.intervention_mask} of patient "
                f"{record.patient_id} is missing from its action set"
            ) from None


class OracleBestPolicy(Policy):
    def select(self, record, action_set, table, features=None):
        return table.best_index(record.patient_id)


_POLICY_CLASSES = {
    PolicyKind.LINUCB: LinUCBPolicy,
    PolicyKind.LINTS: LinTSPolicy,
    PolicyKind.RANDOM: RandomPolicy,
    PolicyKind.LOGGED: LoggedPolicy,
    PolicyKind.ORACLE_BEST: OracleBestPolicy,
}


def make_policy(config, feature_spec=None, rng=None):
    """Instantiate the policy class for a config.

    The optional rng overrides the config seed; replay harnesses pass
    streams derived from (master seed, replication index).
    """
    return _POLICY_CLASSES[config.kind](config, feature_spec, rng)
