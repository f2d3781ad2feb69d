"""Data model for patients, intervention masks, action sets, and cohort files.

A cohort is a CSV with one row per resident holding the full covariates,
the logged 20-bit intervention mask (decimal), and the binary outcome
(1 = ADL loss prevented).  Action sets are the distinct logged masks of a
given cardinality, in ascending mask order.
"""

import csv
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .errors import CohortError

N_INTERVENTIONS = 20
MIN_MASK_POPCOUNT = 1
MAX_MASK_POPCOUNT = 16

OBSERVED_COVARIATES = ("age", "gender", "length_of_stay", "cognition", "adl_baseline")
EXTRA_COVARIATES = ("hearing", "depression", "pain", "comorbidity_count")
FULL_COVARIATES = OBSERVED_COVARIATES + EXTRA_COVARIATES

COHORT_COLUMNS = (
    "patient_id",
    "home_id",
    "age",
    "gender",
    "length_of_stay",
    "cognition",
    "adl_baseline",
    "hearing",
    "depression",
    "pain",
    "comorbidity_count",
    "intervention_mask",
    "outcome",
)

_INT_COLUMNS = {"patient_id", "home_id", "gender", "intervention_mask", "outcome"}


def mask_popcount(mask):
    """Number of interventions applied in a 20-bit mask."""
    return int(mask).bit_count()


def mask_bits(mask):
    """The mask as a float vector of 20 indicator bits (bit 0 first)."""
    m = int(mask)
    return np.array([(m >> k) & 1 for k in range(N_INTERVENTIONS)], dtype=np.float64)


def validate_mask(mask):
    """Check the mask is a realizable intervention combination."""
    m = int(mask)
    if m < 0 or m >= (1 << N_INTERVENTIONS):
        raise ValueError(f"intervention mask {mask} outside the 20-bit range")
    k = mask_popcount(m)
    if not MIN_MASK_POPCOUNT <= k <= MAX_MASK_POPCOUNT:
        raise ValueError(
            f"mask popcount {k} outside [{MIN_MASK_POPCOUNT}, {MAX_MASK_POPCOUNT}]"
        )
    return m


@dataclass(frozen=True)
class PatientRecord:
    """One resident: full covariates, logged intervention mask, logged outcome."""

    patient_id: int
    home_id: int
    age: float
    gender: int
    length_of_stay: float
    cognition: float
    adl_baseline: float
    hearing: float
    depression: float
    pain: float
    comorbidity_count: float
    intervention_mask: int
    outcome: int

    def observed_covariates(self):
        """The 5-field subset available to the learning agent."""
        return np.array(
            [self.age, self.gender, self.length_of_stay, self.cognition, self.adl_baseline]
        )

    def full_covariates(self):
        """All 9 covariates, in schema order (observed first)."""
        return np.array(
            [
                self.age,
                self.gender,
                self.length_of_stay,
                self.cognition,
                self.adl_baseline,
                self.hearing,
                self.depression,
                self.pain,
                self.comorbidity_count,
            ]
        )

    def validate(self):
        for name in FULL_COVARIATES:
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite value in column '{name}'")
        if self.gender not in (0, 1):
            raise ValueError(f"gender must be 0 or 1, got {self.gender}")
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome}")
        if self.home_id < 1 or self.home_id > 10:
            raise ValueError(f"home_id must be in 1..10, got {self.home_id}")
        validate_mask(self.intervention_mask)
        return self


@dataclass(frozen=True)
class ActionSet:
    """The candidate masks for one time step: all realized masks of one cardinality."""

    masks: tuple

    def __post_init__(self):
        if not self.masks:
            raise ValueError("action set must be nonempty")

    def __len__(self):
        return len(self.masks)

    def index_of(self, mask):
        """Position of a mask in canonical (ascending) order."""
        return self.masks.index(int(mask))


class CohortDataset:
    """An ordered, validated list of patient records plus the cardinality index.

    The index maps mask popcount to the distinct realized masks of that
    popcount, deduplicated and sorted ascending (the canonical action order).
    """

    def __init__(self, records):
        records = list(records)
        if not records:
            raise CohortError("cohort is empty")
        seen_ids = set()
        for i, rec in enumerate(records):
            try:
                rec.validate()
            except ValueError as exc:
                raise CohortError(str(exc), row=i + 1) from exc
            if rec.patient_id in seen_ids:
                raise CohortError(
                    f"duplicate patient_id {rec.patient_id}", row=i + 1, column="patient_id"
                )
            seen_ids.add(rec.patient_id)
        self.records = records
        buckets = {}
        for rec in records:
            buckets.setdefault(mask_popcount(rec.intervention_mask), set()).add(
                rec.intervention_mask
            )
        self.by_cardinality = {k: tuple(sorted(v)) for k, v in sorted(buckets.items())}

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def action_set_for(self, patient):
        """All realized masks with the patient's logged cardinality."""
        k = mask_popcount(patient.intervention_mask)
        return ActionSet(self.by_cardinality[k])

    def outcomes(self):
        return np.array([rec.outcome for rec in self.records], dtype=np.int64)

    def observed_matrix(self):
        """(n, 5) matrix of observed covariates in cohort order."""
        return np.stack([rec.observed_covariates() for rec in self.records])

    def full_matrix(self):
        """(n, 9) matrix of full covariates in cohort order."""
        return np.stack([rec.full_covariates() for rec in self.records])


def _parse_cell(text, column, row):
    text = text.strip()
    try:
        if column in _INT_COLUMNS:
            return int(text)
        return float(text)
    except ValueError as exc:
        raise CohortError(f"non-numeric cell {text!r}", row=row, column=column) from exc


def load_cohort(path):
    """Load and validate a cohort CSV; row order is preserved.

    Raises CohortError naming the offending row and column on missing
    columns, non-numeric cells, or invariant violations.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CohortError(f"{path}: file is empty") from None
        if tuple(h.strip() for h in header) != COHORT_COLUMNS:
            missing = set(COHORT_COLUMNS) - {h.strip() for h in header}
            if missing:
                raise CohortError(f"missing columns: {', '.join(sorted(missing))}")
            raise CohortError(f"unexpected column order: {header}")
        records = []
        for row_num, row in enumerate(reader, start=1):
            if len(row) != len(COHORT_COLUMNS):
                raise CohortError(
                    f"expected {len(COHORT_COLUMNS)} cells, got {len(row)}", row=row_num
                )
            values = {
                col: _parse_cell(cell, col, row_num)
                for col, cell in zip(COHORT_COLUMNS, row)
            }
            rec = PatientRecord(**values)
            try:
                rec.validate()
            except ValueError as exc:
                raise CohortError(str(exc), row=row_num) from exc
            records.append(rec)
    return CohortDataset(records)


def save_cohort(cohort, path):
    """Write a cohort CSV in the schema accepted by load_cohort.

    Floats are written with their shortest round-trip representation, so
    save -> load -> save is byte-identical.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COHORT_COLUMNS)
        for rec in cohort:
            row = []
            for field in dataclass_fields(PatientRecord):
                value = getattr(rec, field.name)
                row.append(str(int(value)) if field.name in _INT_COLUMNS else repr(float(value)))
            writer.writerow(row)
