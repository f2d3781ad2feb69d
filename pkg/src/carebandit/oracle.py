"""Counterfactual reward machinery.

Candidate reward models are fitted to (full covariates, logged mask) ->
logged outcome, compared by 5-fold cross-validated AUC, refitted on the
whole cohort, and then used to impute a reward for every action in every
patient's action set.  The imputed table is treated as ground truth by
the replay simulator.
"""

import csv
import enum
import json
from dataclasses import dataclass

import numpy as np

from .domain import mask_bits
from .errors import ConfigurationError
from .models import fit_boosted_trees, fit_logistic, model_from_dict

DEFAULT_THRESHOLD = 0.26
DEFAULT_CV_FOLDS = 5


class Family(enum.Enum):
    LOGISTIC = "logistic"
    BOOSTED_TREES = "boosted_trees"

    @classmethod
    def parse(cls, text):
        for fam in cls:
            if fam.value == str(text).strip().lower():
                return fam
        raise ConfigurationError(f"unknown model family {text!r}")


class Weighting(enum.Enum):
    EQUAL = "equal"
    UPWEIGHT_MINORITY = "upweight_minority"

    @classmethod
    def parse(cls, text):
        for w in cls:
            if w.value == str(text).strip().lower():
                return w
        raise ConfigurationError(f"unknown class weighting {text!r}")


class RewardMode(enum.Enum):
    BINARY = "binary"
    PROBABILITY = "probability"

    @classmethod
    def parse(cls, text):
        for mode in cls:
            if mode.value == str(text).strip().lower():
                return mode
        raise ConfigurationError(f"unknown reward mode {text!r}")


@dataclass(frozen=True)
class RewardModelConfig:
    """One candidate in the model-selection grid."""

    family: Family
    weighting: Weighting = Weighting.EQUAL
    # logistic
    l2: float = 1.0
    # boosted trees
    n_trees: int = 50
    max_leaves: int = 30
    max_depth: int = 20
    learning_rate: float = 0.1
    l1_penalty: float = 1.0
    l2_penalty: float = 1.0

    def __post_init__(self):
        if self.l2 <= 0:
            raise ConfigurationError("logistic l2 penalty must be > 0")
        if self.n_trees < 1 or self.max_leaves < 2 or self.max_depth < 1:
            raise ConfigurationError("tree counts, leaves and depth must be positive")
        if not 0 < self.learning_rate <= 1:
            raise ConfigurationError("learning rate must be in (0, 1]")
        if self.l1_penalty < 0 or self.l2_penalty < 0:
            raise ConfigurationError("leaf penalties must be >= 0")

    def label(self):
        if self.family is Family.LOGISTIC:
            return f"logistic(l2={self.l2},{self.weighting.value})"
        return (
            f"boosted(trees={self.n_trees},leaves={self.max_leaves},depth={self.max_depth},"
            f"lr={self.learning_rate},l1={self.l1_penalty},l2={self.l2_penalty},"
            f"{self.weighting.value})"
        )

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "l2", "n_trees", "max_leaves", "max_depth", "learning_rate",
            "l1_penalty", "l2_penalty",
        )}
        d["family"] = self.family.value
        d["weighting"] = self.weighting.value
        return d

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        obj["family"] = Family.parse(obj["family"])
        obj["weighting"] = Weighting.parse(obj["weighting"])
        return cls(**obj)


def default_candidates():
    """The stock selection grid: both families, both weightings, two tree shapes."""
    out = []
    for weighting in (Weighting.EQUAL, Weighting.UPWEIGHT_MINORITY):
        out.append(RewardModelConfig(Family.LOGISTIC, weighting, l2=1.0))
        out.append(RewardModelConfig(Family.BOOSTED_TREES, weighting))
        out.append(
            RewardModelConfig(
                Family.BOOSTED_TREES,
                weighting,
                n_trees=100,
                max_leaves=8,
                max_depth=3,
                learning_rate=0.1,
            )
        )
    return out


# ---------------------------------------------------------------------------
# AUC and cross-validation
# ---------------------------------------------------------------------------


def auc(scores, labels):
    """Area under the ROC curve by the rank formulation.

    Equals P(score+ > score-) + P(tie)/2 exactly, including ties, via
    average ranks.  Raises when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos + n_neg != labels.size:
        raise ValueError("labels must be binary")
    if n_pos == 0 or n_neg == 0:
        raise ConfigurationError("AUC undefined: only one class present")
    uniq, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    avg_ranks = starts + (counts + 1) / 2.0  # 1-based average rank per distinct value
    rank_sum_pos = float(np.sum(avg_ranks[inverse][labels == 1]))
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def stratified_folds(labels, n_folds, rng):
    """Deal each class round-robin into folds after a seeded shuffle.

    Every fold must end up with both classes; otherwise the caller is told
    to use fewer folds.
    """
    labels = np.asarray(labels)
    folds = [[] for _ in range(n_folds)]
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        for i, j in enumerate(idx):
            folds[i % n_folds].append(int(j))
    for k, fold in enumerate(folds):
        fold_labels = labels[fold]
        if len(fold) == 0 or np.all(fold_labels == fold_labels[0]):
            raise ConfigurationError(
                f"fold {k} lacks both outcome classes; use fewer than {n_folds} folds"
            )
    return [np.array(sorted(fold)) for fold in folds]


def _class_weights(y, weighting):
    w = np.ones(y.size)
    if weighting is Weighting.UPWEIGHT_MINORITY:
        n_pos = int(np.sum(y == 1))
        n_neg = y.size - n_pos
        if 0 < n_pos < y.size:
            minority = 1 if n_pos < n_neg else 0
            ratio = max(n_pos, n_neg) / min(n_pos, n_neg)
            w[y == minority] *= ratio
    return w


def _fit_family(X, y, config):
    w = _class_weights(y, config.weighting)
    if config.family is Family.LOGISTIC:
        return fit_logistic(X, y, l2=config.l2, sample_weight=w)
    return fit_boosted_trees(
        X,
        y,
        n_trees=config.n_trees,
        max_leaves=config.max_leaves,
        max_depth=config.max_depth,
        learning_rate=config.learning_rate,
        l1=config.l1_penalty,
        l2=config.l2_penalty,
        sample_weight=w,
    )


def oracle_features(records, masks=None):
    """(n, 29) model matrix: full covariates then the 20 mask bits."""
    rows = []
    for i, rec in enumerate(records):
        mask = rec.intervention_mask if masks is None else masks[i]
        rows.append(np.concatenate([rec.full_covariates(), mask_bits(mask)]))
    return np.stack(rows)


@dataclass
class SelectionResult:
    config: RewardModelConfig
    cv_auc: float
    scores: list  # (config, mean_auc) in candidate order


def select_reward_model(cohort, candidates, folds=DEFAULT_CV_FOLDS, seed=0):
    """Pick the candidate with the highest mean held-out AUC.

    Stratified folds are fixed once per selection run, so every candidate
    sees the same splits.  Ties go to the earlier candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigurationError("need at least one candidate configuration")
    X = oracle_features(cohort.records)
    y = cohort.outcomes().astype(np.float64)
    rng = np.random.default_rng(seed)
    fold_idx = stratified_folds(y, folds, rng)
    all_idx = np.arange(y.size)
    scores = []
    for config in candidates:
        fold_aucs = []
        for held_out in fold_idx:
            train = np.setdiff1d(all_idx, held_out)
            model = _fit_family(X[train], y[train], config)
            fold_aucs.append(auc(model.predict_proba(X[held_out]), y[held_out]))
        scores.append((config, float(np.mean(fold_aucs))))
    best_config, best_auc = scores[0]
    for config, mean_auc in scores[1:]:
        if mean_auc > best_auc:
            best_config, best_auc = config, mean_auc
    return SelectionResult(config=best_config, cv_auc=best_auc, scores=scores)


# ---------------------------------------------------------------------------
# Fitted oracle and reward imputation
# ---------------------------------------------------------------------------


@dataclass
class RewardOracle:
    """Fitted reward model treated as the truth during replay."""

    model: object
    config: RewardModelConfig
    threshold: float = DEFAULT_THRESHOLD
    mode: RewardMode = RewardMode.BINARY
    fit_seed: int = 0
    cv_auc: float | None = None

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError("classification threshold must be in (0, 1)")

    def predict_proba(self, X):
        return self.model.predict_proba(X)

    def rewards(self, X):
        p = self.predict_proba(X)
        if self.mode is RewardMode.BINARY:
            return (p >= self.threshold).astype(np.float64)
        return p

    def save(self, path):
        payload = {
            "model": self.model.to_dict(),
            "config": self.config.to_dict(),
            "threshold": self.threshold,
            "mode": self.mode.value,
            "fit_seed": self.fit_seed,
            "cv_auc": self.cv_auc,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            model=model_from_dict(payload["model"]),
            config=RewardModelConfig.from_dict(payload["config"]),
            threshold=float(payload["threshold"]),
            mode=RewardMode.parse(payload["mode"]),
            fit_seed=int(payload["fit_seed"]),
            cv_auc=payload["cv_auc"],
        )


def fit_reward_model(
    cohort,
    config,
    threshold=DEFAULT_THRESHOLD,
    mode=RewardMode.BINARY,
    seed=0,
    cv_auc=None,
):
    """Fit one configured family on the whole cohort.

    The fit itself is deterministic; the seed is recorded so a saved
    oracle carries its full provenance.
    """
    y = cohort.outcomes().astype(np.float64)
    if np.all(y == y[0]):
        raise ConfigurationError("cohort has a single outcome class; cannot fit")
    X = oracle_features(cohort.records)
    model = _fit_family(X, y, config)
    return RewardOracle(
        model=model, config=config, threshold=threshold, mode=mode,
        fit_seed=seed, cv_auc=cv_auc,
    )


class FullRewardTable:
    """Imputed reward for every action in every patient's action set.

    Rows are keyed by patient id and aligned with the canonical action
    order of that patient's cardinality bucket; ``best[pid]`` is the
    first-max argmax of the row.
    """

    def __init__(self, rows, best, mode):
        self.rows = rows
        self.best = best
        self.mode = mode

    def row(self, patient_id):
        return self.rows[patient_id]

    def best_index(self, patient_id):
        return self.best[patient_id]

    def save(self, cohort, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["patient_id", "action_index", "mask", "reward", "is_best"])
            for rec in cohort:
                aset = cohort.action_set_for(rec)
                row = self.rows[rec.patient_id]
                best = self.best[rec.patient_id]
                for i, mask in enumerate(aset.masks):
                    writer.writerow(
                        [rec.patient_id, i, mask, repr(float(row[i])), int(i == best)]
                    )

    @classmethod
    def load(cls, path, mode=RewardMode.BINARY):
        rows = {}
        flagged = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                pid = int(rec["patient_id"])
                rows.setdefault(pid, []).append(float(rec["reward"]))
                if int(rec["is_best"]):
                    flagged[pid] = int(rec["action_index"])
        packed = {pid: np.array(vals) for pid, vals in rows.items()}
        best = {pid: int(np.argmax(vals)) for pid, vals in packed.items()}
        if best != flagged:
            raise ValueError(f"{path}: is_best flags disagree with row maxima")
        return cls(rows=packed, best=best, mode=mode)


def impute_full_rewards(oracle, cohort):
    """Predict a reward for every (patient, candidate action) pair.

    Binary mode thresholds the predicted probability at the oracle's
    threshold; the best index is the row argmax with canonical-order
    (lowest index) tie-break.
    """
    rows = {}
    best = {}
    for rec in cohort:
        aset = cohort.action_set_for(rec)
        full = rec.full_covariates()
        X = np.stack([np.concatenate([full, mask_bits(m)]) for m in aset.masks])
        row = oracle.rewards(X)
        rows[rec.patient_id] = row
        best[rec.patient_id] = int(np.argmax(row))
    return FullRewardTable(rows=rows, best=best, mode=oracle.mode)
