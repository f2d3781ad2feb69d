"""Synthetic cohort generation with a known reward mechanism.

The generator draws covariates, a logged intervention mask, and a logged
outcome per patient, then calibrates a global logit offset so the
realized adverse-outcome rate (outcome = 0) hits the configured target.
The mechanism that produced the outcomes is returned as a descriptor, so
end-to-end experiments can score actions against the exact truth instead
of a fitted approximation.
"""

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    CohortDataset,
    MAX_MASK_POPCOUNT,
    MIN_MASK_POPCOUNT,
    N_INTERVENTIONS,
    PatientRecord,
    mask_bits,
)
from .errors import ConfigurationError, GenerationError
from .models import _logit, sigmoid
from .oracle import DEFAULT_THRESHOLD, FullRewardTable, RewardMode

DEFAULT_ADVERSE_RATE = 0.133
DEFAULT_N_PATIENTS = 278
DEFAULT_N_HOMES = 10

# Nominal standardization constants for the linear mechanism: the truth is
# defined against these fixed centers/scales, not against realized sample
# statistics, so it does not move when the cohort is regenerated.
NOMINAL_COVARIATE_MEANS = (82.0, 0.7, 1000.0, 15.0, 55.0)
NOMINAL_COVARIATE_SDS = (8.0, 0.46, 560.0, 7.0, 20.0)


class Mechanism(enum.Enum):
    LINEAR_LOGISTIC = "linear_logistic"
    TREE_ENSEMBLE = "tree_ensemble"

    @classmethod
    def parse(cls, text):
        for mech in cls:
            if mech.value == str(text).strip().lower():
                return mech
        raise ConfigurationError(f"unknown ground-truth mechanism {text!r}")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the cohort generator."""

    seed: int = 42
    n_patients: int = DEFAULT_N_PATIENTS
    n_homes: int = DEFAULT_N_HOMES
    popcount_range: tuple = (MIN_MASK_POPCOUNT, MAX_MASK_POPCOUNT)
    adverse_rate: float = DEFAULT_ADVERSE_RATE
    mechanism: Mechanism = Mechanism.LINEAR_LOGISTIC
    # linear mechanism: coefficient scales for covariate main effects,
    # intervention main effects, and covariate-intervention interactions
    main_scale: float = 0.6
    mask_scale: float = 0.65
    interaction_scale: float = 0.5
    # tree mechanism: multiplier on the canonical rule weights
    tree_weight_scale: float = 1.0
    # sd of per-patient logit noise applied when drawing logged outcomes
    logit_noise: float = 0.0
    # mean of the truncated-Poisson popcount distribution
    popcount_mean: float = 5.5
    # the logged action is the truth-best of this many candidate masks;
    # 1 recovers a uniformly random logged action
    nurse_candidates: int = 4

    def __post_init__(self):
        if not isinstance(self.n_patients, int) or self.n_patients < 2:
            raise ConfigurationError("n_patients must be an integer >= 2")
        if not isinstance(self.n_homes, int) or not 1 <= self.n_homes <= 10:
            raise ConfigurationError("n_homes must be an integer in [1, 10]")
        lo, hi = self.popcount_range
        if not (MIN_MASK_POPCOUNT <= lo <= hi <= MAX_MASK_POPCOUNT):
            raise ConfigurationError(
                f"popcount_range must satisfy {MIN_MASK_POPCOUNT} <= lo <= hi <= "
                f"{MAX_MASK_POPCOUNT}"
            )
        if not 0.0 < self.adverse_rate < 1.0:
            raise ConfigurationError("adverse_rate must be in (0, 1)")
        if self.logit_noise < 0:
            raise ConfigurationError("logit_noise must be >= 0")
        if self.popcount_mean <= 0:
            raise ConfigurationError("popcount_mean must be > 0")
        if not isinstance(self.nurse_candidates, int) or self.nurse_candidates < 1:
            raise ConfigurationError("nurse_candidates must be an integer >= 1")
        for name in ("main_scale", "mask_scale", "interaction_scale", "tree_weight_scale"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")


# Feature layout used by the tree mechanism's rules: the nine patient
# covariates in cohort-column order, then the 20 intervention bits.
RULE_FEATURES = (
    "age", "gender", "length_of_stay", "cognition", "adl_baseline",
    "hearing", "depression", "pain", "comorbidity_count",
) + tuple(f"bit{j}" for j in range(N_INTERVENTIONS))


def _bit(j):
    return 9 + j


def canonical_rules(scale=1.0):
    """Fixed rule ensemble whose effects flip sign with patient state.

    Each rule is a conjunction of threshold atoms over the 29-entry
    feature layout; its weight is added to the logit when all atoms hold.
    The conditional signs make the mechanism inexpressible as a linear
    function of the same features.
    """
    def rule(weight, *atoms):
        return {"atoms": [list(a) for a in atoms], "weight": weight * scale}

    on = lambda j: (_bit(j), "gt", 0.5)
    off = lambda j: (_bit(j), "le", 0.5)
    return [
        rule(+2.2, on(2), (0, "gt", 84.0)),
        rule(-1.4, on(2), (0, "le", 84.0)),
        rule(+2.0, on(5), (3, "le", 12.0)),
        rule(-1.2, on(5), (3, "gt", 12.0)),
        rule(+1.8, on(7), (4, "le", 45.0)),
        rule(-1.0, on(7), (4, "gt", 45.0)),
        rule(-2.4, on(11), on(3)),
        rule(+1.6, on(11), off(3)),
        rule(+1.6, on(3), off(11)),
        rule(+1.9, on(14), (6, "gt", 8.0)),
        rule(-1.1, on(14), (6, "le", 8.0)),
        rule(+0.8, on(17)),
        rule(+1.5, on(9), (7, "gt", 6.0)),
        rule(-0.9, on(9), (7, "le", 6.0)),
        rule(-1.0, (8, "gt", 5.0)),
        rule(-0.8, (0, "gt", 90.0)),
    ]


@dataclass
class GroundTruth:
    """The exact outcome mechanism behind a synthetic cohort.

    ``probability`` and ``best_action`` score the noiseless mechanism
    (including the calibration offset); generation-time logit noise only
    perturbs the logged outcome draws and is recorded for provenance.
    """

    mechanism: Mechanism
    offset: float = 0.0
    logit_noise: float = 0.0
    cov_means: np.ndarray = field(
        default_factory=lambda: np.array(NOMINAL_COVARIATE_MEANS)
    )
    cov_sds: np.ndarray = field(default_factory=lambda: np.array(NOMINAL_COVARIATE_SDS))
    mu1: np.ndarray | None = None  # (5,) observed-covariate main effects
    mu2: np.ndarray | None = None  # (20,) intervention main effects
    mu3: np.ndarray | None = None  # (100,) interactions, covariate-major
    rules: list | None = None
    intervention_weights: np.ndarray | None = None
    covariate_params: dict | None = None

    def _standardized(self, record):
        obs = record.observed_covariates()
        return (obs - self.cov_means) / self.cov_sds

    def logits(self, record, masks):
        """Offset-inclusive logit of outcome 1 for each candidate mask."""
        masks = list(masks)
        bits = np.stack([mask_bits(m) for m in masks]) if masks else np.zeros((0, 20))
        if self.mechanism is Mechanism.LINEAR_LOGISTIC:
            z = self._standardized(record)
            base = float(z @ self.mu1)
            inter = z @ self.mu3.reshape(5, N_INTERVENTIONS)
            return self.offset + base + bits @ (self.mu2 + inter)
        full = record.full_covariates()
        out = np.full(len(masks), self.offset)
        for i in range(len(masks)):
            x = np.concatenate([full, bits[i]])
            total = 0.0
            for r in self.rules:
                if all(
                    (x[f] <= thr if op == "le" else x[f] > thr)
                    for f, op, thr in r["atoms"]
                ):
                    total += r["weight"]
            out[i] += total
        return out

    def probability(self, record, mask):
        return float(sigmoid(self.logits(record, [mask]))[0])

    def row_probabilities(self, record, masks):
        return sigmoid(self.logits(record, masks))

    def best_action(self, record, action_set):
        """Index of the truth-best mask, lowest index on ties."""
        return int(np.argmax(self.row_probabilities(record, action_set.masks)))

    # -- persistence: one "key=<json>" line per field, fixed order --

    def save(self, path):
        items = [("mechanism", self.mechanism.value), ("offset", self.offset),
                 ("logit_noise", self.logit_noise),
                 ("cov_means", self.cov_means.tolist()),
                 ("cov_sds", self.cov_sds.tolist())]
        if self.mechanism is Mechanism.LINEAR_LOGISTIC:
            items += [("mu1", self.mu1.tolist()), ("mu2", self.mu2.tolist()),
                      ("mu3", self.mu3.tolist())]
        else:
            items += [("rules", self.rules)]
        if self.intervention_weights is not None:
            items += [("intervention_weights", self.intervention_weights.tolist())]
        if self.covariate_params is not None:
            items += [("covariate_params", self.covariate_params)]
        with open(path, "w", encoding="utf-8") as fh:
            for key, value in items:
                fh.write(f"{key}={json.dumps(value)}\n")

    @classmethod
    def load(cls, path):
        fields = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                key, _, raw = line.partition("=")
                fields[key] = json.loads(raw)
        mechanism = Mechanism.parse(fields.pop("mechanism"))
        arrays = {}
        for key in ("cov_means", "cov_sds", "mu1", "mu2", "mu3", "intervention_weights"):
            if key in fields:
                arrays[key] = np.asarray(fields.pop(key), dtype=np.float64)
        return cls(mechanism=mechanism, **arrays, **fields)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _draw_covariates(rng, n):
    """Plausible elder-care covariate draws, rounded for stable CSV text."""

    def clipped_normal(mean, sd, lo, hi, decimals):
        vals = np.clip(rng.normal(mean, sd, size=n), lo, hi)
        return np.round(vals, decimals)

    return {
        "age": clipped_normal(82.0, 8.0, 65.0, 100.0, 1),
        "gender": rng.binomial(1, 0.7, size=n).astype(np.int64),
        "length_of_stay": np.round(rng.uniform(30.0, 2000.0, size=n), 0),
        "cognition": clipped_normal(15.0, 7.0, 0.0, 30.0, 1),
        "adl_baseline": clipped_normal(55.0, 20.0, 0.0, 100.0, 1),
        "hearing": rng.integers(0, 5, size=n).astype(np.float64),
        "depression": clipped_normal(6.0, 4.0, 0.0, 15.0, 1),
        "pain": rng.integers(0, 11, size=n).astype(np.float64),
        "comorbidity_count": np.minimum(rng.poisson(3.0, size=n), 12).astype(np.float64),
    }


COVARIATE_PARAMS_DOC = {
    "age": {"dist": "normal", "mean": 82.0, "sd": 8.0, "clip": [65.0, 100.0]},
    "gender": {"dist": "bernoulli", "p": 0.7},
    "length_of_stay": {"dist": "uniform", "low": 30.0, "high": 2000.0},
    "cognition": {"dist": "normal", "mean": 15.0, "sd": 7.0, "clip": [0.0, 30.0]},
    "adl_baseline": {"dist": "normal", "mean": 55.0, "sd": 20.0, "clip": [0.0, 100.0]},
    "hearing": {"dist": "uniform_int", "low": 0, "high": 4},
    "depression": {"dist": "normal", "mean": 6.0, "sd": 4.0, "clip": [0.0, 15.0]},
    "pain": {"dist": "uniform_int", "low": 0, "high": 10},
    "comorbidity_count": {"dist": "poisson", "mean": 3.0, "clip_high": 12},
}


def _popcount_probabilities(config):
    lo, hi = config.popcount_range
    ks = np.arange(lo, hi + 1)
    log_pmf = ks * math.log(config.popcount_mean) - np.array(
        [math.lgamma(k + 1) for k in ks]
    )
    pmf = np.exp(log_pmf - log_pmf.max())
    return ks, pmf / pmf.sum()


def _draw_mask(rng, popcount, weights):
    chosen = rng.choice(N_INTERVENTIONS, size=popcount, replace=False, p=weights)
    mask = 0
    for j in chosen:
        mask |= 1 << int(j)
    return mask


def _build_truth(config, rng):
    if config.mechanism is Mechanism.LINEAR_LOGISTIC:
        return GroundTruth(
            mechanism=config.mechanism,
            logit_noise=config.logit_noise,
            mu1=rng.normal(0.0, config.main_scale, size=5),
            mu2=rng.normal(0.0, config.mask_scale, size=N_INTERVENTIONS),
            mu3=rng.normal(0.0, config.interaction_scale, size=5 * N_INTERVENTIONS),
            intervention_weights=rng.dirichlet(np.full(N_INTERVENTIONS, 3.0)),
            covariate_params=COVARIATE_PARAMS_DOC,
        )
    return GroundTruth(
        mechanism=config.mechanism,
        logit_noise=config.logit_noise,
        rules=canonical_rules(config.tree_weight_scale),
        intervention_weights=rng.dirichlet(np.full(N_INTERVENTIONS, 3.0)),
        covariate_params=COVARIATE_PARAMS_DOC,
    )


def _calibrate_offset(base_logits, uniforms, target_zeros):
    """Offset making exactly ``target_zeros`` outcomes fall to 0.

    Patient t is adverse iff u_t >= sigmoid(logit_t + offset), i.e. iff
    offset <= logit(u_t) - logit_t; the adverse count is therefore a step
    function of the offset and any count in [0, n] is reachable by
    placing the offset between consecutive order statistics.
    """
    n = base_logits.size
    with np.errstate(divide="ignore"):
        thresholds = _logit(uniforms) - base_logits
    thresholds = np.sort(thresholds)[::-1]  # descending
    if target_zeros == 0:
        return float(thresholds[0] + 1.0)
    if target_zeros == n:
        return float(thresholds[-1] - 1.0)
    upper = thresholds[target_zeros - 1]
    lower = thresholds[target_zeros]
    if not upper > lower:
        raise GenerationError(
            "offset calibration failed: tied adverse-count thresholds; "
            "retry with a different seed"
        )
    return float((upper + lower) / 2.0)


def generate_cohort(config):
    """Draw a full synthetic cohort plus the mechanism that produced it.

    Deterministic given the config seed.  The realized adverse rate
    equals round(n * adverse_rate) / n exactly.
    """
    root = np.random.SeedSequence(config.seed)
    truth_rng, cov_rng, mask_rng, outcome_rng, noise_rng = (
        np.random.default_rng(child) for child in root.spawn(5)
    )
    n = config.n_patients
    truth = _build_truth(config, truth_rng)
    covs = _draw_covariates(cov_rng, n)
    home_ids = cov_rng.integers(1, config.n_homes + 1, size=n)

    ks, pmf = _popcount_probabilities(config)
    popcounts = mask_rng.choice(ks, size=n, p=pmf)

    records = []
    base_logits = np.empty(n)
    for i in range(n):
        partial = PatientRecord(
            patient_id=i,
            home_id=int(home_ids[i]),
            age=float(covs["age"][i]),
            gender=int(covs["gender"][i]),
            length_of_stay=float(covs["length_of_stay"][i]),
            cognition=float(covs["cognition"][i]),
            adl_baseline=float(covs["adl_baseline"][i]),
            hearing=float(covs["hearing"][i]),
            depression=float(covs["depression"][i]),
            pain=float(covs["pain"][i]),
            comorbidity_count=float(covs["comorbidity_count"][i]),
            intervention_mask=1,  # placeholder until the logged mask is drawn
            outcome=0,
        )
        candidates = [
            _draw_mask(mask_rng, int(popcounts[i]), truth.intervention_weights)
            for _ in range(config.nurse_candidates)
        ]
        logits = truth.logits(partial, candidates)
        pick = int(np.argmax(logits))
        records.append((partial, candidates[pick]))
        base_logits[i] = logits[pick]

    if config.logit_noise > 0:
        base_logits += noise_rng.normal(0.0, config.logit_noise, size=n)
    uniforms = outcome_rng.random(n)
    target_zeros = round(n * config.adverse_rate)
    offset = _calibrate_offset(base_logits, uniforms, target_zeros)
    truth.offset = offset
    outcomes = (uniforms < sigmoid(base_logits + offset)).astype(np.int64)

    final = [
        PatientRecord(
            patient_id=rec.patient_id,
            home_id=rec.home_id,
            age=rec.age,
            gender=rec.gender,
            length_of_stay=rec.length_of_stay,
            cognition=rec.cognition,
            adl_baseline=rec.adl_baseline,
            hearing=rec.hearing,
            depression=rec.depression,
            pain=rec.pain,
            comorbidity_count=rec.comorbidity_count,
            intervention_mask=mask,
            outcome=int(outcomes[i]),
        )
        for i, (rec, mask) in enumerate(records)
    ]
    return CohortDataset(final), truth


def truth_reward_table(truth, cohort, mode=RewardMode.PROBABILITY,
                       threshold=DEFAULT_THRESHOLD):
    """Reward table scored by the exact mechanism instead of a fitted model."""
    rows = {}
    best = {}
    for rec in cohort:
        aset = cohort.action_set_for(rec)
        p = truth.row_probabilities(rec, aset.masks)
        row = p if mode is RewardMode.PROBABILITY else (p >= threshold).astype(np.float64)
        rows[rec.patient_id] = row
        best[rec.patient_id] = int(np.argmax(row))
    return FullRewardTable(rows=rows, best=best, mode=mode)
