"""Replay experiments: resample patients, run policies, track regret.

A replay steps through T sampled patients; at each step the policy picks
one mask from the patient's action set, earns that mask's entry from the
full reward table, and (for the learning policies) updates its ridge
state.  Replications differ only in their derived random streams.
"""

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from .features import build_action_features
from .policies import BANDIT_KINDS, PolicyConfig, make_policy

DEFAULT_HORIZON = 2000
DEFAULT_REPLICATIONS = 5
DEFAULT_GRID = (0.1, 0.3, 0.5)

# stream ids appended to a replay seed so the patient sequence is shared
# by every policy run at that seed while selection noise stays private
_PATIENT_STREAM = 0
_POLICY_STREAM = 1

TRACE_COLUMNS = (
    "step", "patient_id", "chosen_index", "best_index",
    "inst_regret", "cum_regret", "cum_reward",
)
BAND_COLUMNS = ("step", "p25", "median", "p75")


class SamplingMode(enum.Enum):
    WITH_REPLACEMENT = "with_replacement"
    COHORT_ORDER = "cohort_order"

    @classmethod
    def parse(cls, text):
        for mode in cls:
            if mode.value == str(text).strip().lower():
                return mode
        raise ConfigurationError(f"unknown sampling mode {text!r}")


@dataclass(frozen=True)
class ReplayConfig:
    """Experiment-level knobs shared by every policy in the roster."""

    horizon: int = DEFAULT_HORIZON
    replications: int = DEFAULT_REPLICATIONS
    master_seed: int = 0
    sampling: SamplingMode = SamplingMode.WITH_REPLACEMENT
    grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigurationError("horizon must be an integer >= 1")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigurationError("replications must be an integer >= 1")
        if len(self.grid) == 0:
            raise ConfigurationError("hyperparameter grid must be nonempty")


def replication_seed(master_seed, rep):
    """Stable scalar seed for one replication of one experiment."""
    return int(np.random.SeedSequence((master_seed, rep)).generate_state(1)[0])


@dataclass
class RegretTrace:
    """Per-step record of one replay run."""

    label: str
    patient_ids: np.ndarray
    chosen: np.ndarray
    best: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    cum_reward: np.ndarray

    @property
    def horizon(self):
        return self.inst_regret.size

    @property
    def final_cum_regret(self):
        return float(self.cum_regret[-1])

    @property
    def final_cum_reward(self):
        return float(self.cum_reward[-1])

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for t in range(self.horizon):
                writer.writerow([
                    t + 1,
                    int(self.patient_ids[t]),
                    int(self.chosen[t]),
                    int(self.best[t]),
                    repr(float(self.inst_regret[t])),
                    repr(float(self.cum_regret[t])),
                    repr(float(self.cum_reward[t])),
                ])

    @classmethod
    def load(cls, path, label=""):
        cols = {name: [] for name in TRACE_COLUMNS}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
                raise ValueError(f"{path}: unexpected trace columns")
            for row in reader:
                for name in TRACE_COLUMNS:
                    cols[name].append(row[name])
        return cls(
            label=label,
            patient_ids=np.array(cols["patient_id"], dtype=np.int64),
            chosen=np.array(cols["chosen_index"], dtype=np.int64),
            best=np.array(cols["best_index"], dtype=np.int64),
            inst_regret=np.array(cols["inst_regret"], dtype=np.float64),
            cum_regret=np.array(cols["cum_regret"], dtype=np.float64),
            cum_reward=np.array(cols["cum_reward"], dtype=np.float64),
        )


@dataclass
class QuantileBand:
    """Across-replication order statistics of cumulative regret."""

    label: str
    p25: np.ndarray
    median: np.ndarray
    p75: np.ndarray

    def __post_init__(self):
        if not (np.all(self.p25 <= self.median) and np.all(self.median <= self.p75)):
            raise ValueError("quantile bands must be ordered p25 <= median <= p75")

    @property
    def horizon(self):
        return self.median.size

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(BAND_COLUMNS)
            for t in range(self.horizon):
                writer.writerow([
                    t + 1,
                    repr(float(self.p25[t])),
                    repr(float(self.median[t])),
                    repr(float(self.p75[t])),
                ])

    @classmethod
    def load(cls, path, label=""):
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != BAND_COLUMNS:
                raise ValueError(f"{path}: unexpected band columns")
            for row in reader:
                rows.append((row["p25"], row["median"], row["p75"]))
        arr = np.array(rows, dtype=np.float64)
        return cls(label=label, p25=arr[:, 0], median=arr[:, 1], p75=arr[:, 2])


def instantaneous_regret(row, chosen):
    """Gap between the row's best entry and the chosen entry."""
    row = np.asarray(row, dtype=np.float64)
    return float(np.max(row) - row[chosen])


class ReplayContext:
    """Pre-resolved per-patient data shared across replays.

    Caches each patient's action set, reward row, best/logged indices,
    and (when a feature spec is supplied) the action feature matrix.
    """

    def __init__(self, cohort, table, feature_spec=None):
        self.cohort = cohort
        self.table = table
        self.feature_spec = feature_spec
        self.records = list(cohort)
        self.action_sets = {}
        self.rows = {}
        self.best_index = {}
        self.features = {}
        for rec in self.records:
            pid = rec.patient_id
            aset = cohort.action_set_for(rec)
            self.action_sets[pid] = aset
            self.rows[pid] = np.asarray(table.row(pid), dtype=np.float64)
            self.best_index[pid] = table.best_index(pid)
            if feature_spec is not None:
                self.features[pid] = build_action_features(
                    feature_spec, rec.observed_covariates(), aset.masks
                )

    def features_for(self, pid):
        return self.features.get(pid)


def run_replay(cohort, table, policy_config, horizon=DEFAULT_HORIZON, seed=0,
               sampling=SamplingMode.WITH_REPLACEMENT, feature_spec=None,
               context=None):
    """Run one policy for one replication and return its trace.

    Deterministic given (cohort, table, policy_config, horizon, seed).
    The patient sequence depends only on the seed and sampling mode, so
    different policies replayed at the same seed face the same patients.
    """
    if context is None:
        context = ReplayContext(cohort, table, feature_spec)
    records = context.records
    n = len(records)
    patient_rng = np.random.default_rng(
        np.random.SeedSequence((seed, _PATIENT_STREAM))
    )
    policy_rng = np.random.default_rng(np.random.SeedSequence((seed, _POLICY_STREAM)))
    policy = make_policy(policy_config, context.feature_spec, rng=policy_rng)

    if sampling is SamplingMode.WITH_REPLACEMENT:
        order = patient_rng.integers(0, n, size=horizon)
    else:
        order = np.arange(horizon) % n

    patient_ids = np.empty(horizon, dtype=np.int64)
    chosen = np.empty(horizon, dtype=np.int64)
    best = np.empty(horizon, dtype=np.int64)
    inst = np.empty(horizon)
    rewards = np.empty(horizon)
    for t in range(horizon):
        rec = records[order[t]]
        pid = rec.patient_id
        row = context.rows[pid]
        phi = context.features_for(pid)
        try:
            idx = policy.select(rec, context.action_sets[pid], table, features=phi)
            r = float(row[idx])
            if policy.needs_features:
                policy.update(phi[idx], r)
        except NumericalError as err:
            raise NumericalError(
                f"replay of {policy_config.label()} failed at step {t + 1}: {err}"
            ) from err
        patient_ids[t] = pid
        chosen[t] = idx
        best[t] = context.best_index[pid]
        inst[t] = row[context.best_index[pid]] - r
        rewards[t] = r
    return RegretTrace(
        label=policy_config.label(),
        patient_ids=patient_ids,
        chosen=chosen,
        best=best,
        inst_regret=inst,
        cum_regret=np.cumsum(inst),
        cum_reward=np.cumsum(rewards),
    )


def run_replications(cohort, table, policy_config, config, feature_spec=None,
                     context=None):
    """R independent replays with seeds derived from the master seed."""
    if context is None:
        context = ReplayContext(cohort, table, feature_spec)
    return [
        run_replay(
            cohort, table, policy_config,
            horizon=config.horizon,
            seed=replication_seed(config.master_seed, rep),
            sampling=config.sampling,
            context=context,
        )
        for rep in range(config.replications)
    ]


def grid_search(cohort, table, kind, config, variant=None, lam=1.0,
                feature_spec=None, context=None):
    """Try each exploration value; keep the best by median final reward.

    Every grid value reuses the same replication seeds, so comparisons
    are paired.  Ties go to the smaller value.
    """
    if kind not in BANDIT_KINDS:
        raise ConfigurationError("grid search applies to the learning policies only")
    if context is None:
        context = ReplayContext(cohort, table, feature_spec)
    if variant is None:
        if context.feature_spec is None:
            raise ConfigurationError(
                "grid search needs a feature spec or an explicit variant"
            )
        variant = context.feature_spec.variant
    traces_by_value = {}
    for value in config.grid:
        policy_config = PolicyConfig(
            kind=kind, exploration=float(value), lam=lam, variant=variant,
        )
        traces_by_value[float(value)] = run_replications(
            cohort, table, policy_config, config, context=context
        )
    def median_final_reward(value):
        return float(np.median([t.final_cum_reward for t in traces_by_value[value]]))
    best_value = max(
        sorted(traces_by_value), key=lambda v: (median_final_reward(v), -v)
    )
    return best_value, traces_by_value


def aggregate_quantiles(traces, label=None):
    """Per-step 25/50/75 percentiles of cumulative regret across traces."""
    if not traces:
        raise ValueError("need at least one trace to aggregate")
    horizons = {trace.horizon for trace in traces}
    if len(horizons) != 1:
        raise ValueError(f"traces disagree on horizon: {sorted(horizons)}")
    stacked = np.stack([trace.cum_regret for trace in traces])
    p25, median, p75 = np.percentile(stacked, [25, 50, 75], axis=0)
    return QuantileBand(
        label=label if label is not None else traces[0].label,
        p25=p25, median=median, p75=p75,
    )
