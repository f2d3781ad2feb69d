import numpy as np
import pytest

from carebandit.domain import load_cohort, mask_popcount, save_cohort
from carebandit.errors import ConfigurationError
from carebandit.models import sigmoid
from carebandit.oracle import RewardMode, auc
from carebandit.synth import (
    GroundTruth,
    Mechanism,
    SynthConfig,
    _calibrate_offset,
    generate_cohort,
    truth_reward_table,
)


def test_default_config_matches_documented_marginals():
    cohort, truth = generate_cohort(SynthConfig())
    assert len(cohort.records) == 278
    assert {rec.home_id for rec in cohort} == set(range(1, 11))
    for rec in cohort:
        assert 1 <= mask_popcount(rec.intervention_mask) <= 16
    adverse = np.mean([rec.outcome == 0 for rec in cohort])
    assert 0.113 <= adverse <= 0.153
    # the calibration contract is exact, not just within tolerance
    assert sum(rec.outcome == 0 for rec in cohort) == round(278 * 0.133)
    assert truth.mechanism is Mechanism.LINEAR_LOGISTIC


def test_generated_cohort_survives_csv_round_trip(tmp_path):
    cohort, _ = generate_cohort(SynthConfig())
    path = tmp_path / "cohort.csv"
    save_cohort(cohort, path)
    loaded = load_cohort(path)
    assert loaded.records == cohort.records


def test_same_seed_is_byte_identical_different_seed_is_not(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_cohort(generate_cohort(SynthConfig(seed=42))[0], a)
    save_cohort(generate_cohort(SynthConfig(seed=42))[0], b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    save_cohort(generate_cohort(SynthConfig(seed=43))[0], c)
    assert a.read_bytes() != c.read_bytes()


def test_calibration_hits_arbitrary_targets_exactly():
    for rate in (0.05, 0.3, 0.7):
        config = SynthConfig(seed=7, n_patients=100, adverse_rate=rate)
        cohort, _ = generate_cohort(config)
        assert sum(rec.outcome == 0 for rec in cohort) == round(100 * rate)


def test_calibrate_offset_recount_oracle():
    rng = np.random.default_rng(11)
    logits = rng.normal(0.0, 2.0, size=80)
    uniforms = rng.random(80)
    for target in (0, 1, 40, 79, 80):
        offset = _calibrate_offset(logits, uniforms, target)
        zeros = int(np.sum(uniforms >= sigmoid(logits + offset)))
        assert zeros == target


def test_popcount_range_is_respected():
    cohort, _ = generate_cohort(SynthConfig(seed=3, n_patients=60, popcount_range=(3, 6)))
    pops = {mask_popcount(rec.intervention_mask) for rec in cohort}
    assert pops <= {3, 4, 5, 6}
    assert len(pops) > 1


@pytest.mark.parametrize(
    "kwargs,match",
    [
        (dict(adverse_rate=0.0), "adverse_rate"),
        (dict(adverse_rate=1.0), "adverse_rate"),
        (dict(popcount_range=(0, 16)), "popcount_range"),
        (dict(popcount_range=(1, 17)), "popcount_range"),
        (dict(popcount_range=(9, 4)), "popcount_range"),
        (dict(n_homes=11), "n_homes"),
        (dict(n_patients=1), "n_patients"),
        (dict(nurse_candidates=0), "nurse_candidates"),
        (dict(logit_noise=-0.1), "logit_noise"),
    ],
)
def test_config_validation(kwargs, match):
    with pytest.raises(ConfigurationError, match=match):
        SynthConfig(**kwargs)


def test_best_action_varies_across_patients():
    cohort, truth = generate_cohort(SynthConfig())
    assert truth.mu3 is not None and np.any(truth.mu3 != 0)
    best_masks = set()
    for rec in cohort:
        aset = cohort.action_set_for(rec)
        best_masks.add(aset.masks[truth.best_action(rec, aset)])
    assert len(best_masks) >= 2


def test_truth_sidecar_round_trip(tmp_path):
    for mechanism in Mechanism:
        cohort, truth = generate_cohort(
            SynthConfig(seed=9, n_patients=40, mechanism=mechanism)
        )
        path = tmp_path / f"truth_{mechanism.value}.txt"
        truth.save(path)
        loaded = GroundTruth.load(path)
        assert loaded.mechanism is mechanism
        assert loaded.offset == truth.offset
        for rec in list(cohort)[:8]:
            aset = cohort.action_set_for(rec)
            np.testing.assert_array_equal(
                loaded.row_probabilities(rec, aset.masks),
                truth.row_probabilities(rec, aset.masks),
            )


def test_logged_actions_beat_random_candidates_when_skilled():
    def mean_logged_advantage(nurse_candidates):
        cohort, truth = generate_cohort(
            SynthConfig(seed=5, nurse_candidates=nurse_candidates)
        )
        gaps = []
        for rec in cohort:
            aset = cohort.action_set_for(rec)
            logits = truth.logits(rec, aset.masks)
            gaps.append(logits[aset.index_of(rec.intervention_mask)] - logits.mean())
        return float(np.mean(gaps))

    assert mean_logged_advantage(4) > mean_logged_advantage(1) + 0.1


def test_tree_mechanism_outcomes_are_learnable_from_truth():
    cohort, truth = generate_cohort(
        SynthConfig(seed=2, mechanism=Mechanism.TREE_ENSEMBLE)
    )
    probs = np.array([rec_p for rec_p in (
        truth.probability(rec, rec.intervention_mask) for rec in cohort
    )])
    outcomes = np.array([rec.outcome for rec in cohort])
    assert auc(probs, outcomes) > 0.7


def test_truth_table_probability_and_binary_modes():
    cohort, truth = generate_cohort(SynthConfig(seed=13, n_patients=50))
    table = truth_reward_table(truth, cohort)
    for rec in list(cohort)[:10]:
        aset = cohort.action_set_for(rec)
        row = table.row(rec.patient_id)
        np.testing.assert_array_equal(row, truth.row_probabilities(rec, aset.masks))
        assert table.best_index(rec.patient_id) == truth.best_action(rec, aset)
    binary = truth_reward_table(truth, cohort, mode=RewardMode.BINARY, threshold=0.5)
    for rec in list(cohort)[:10]:
        np.testing.assert_array_equal(
            binary.row(rec.patient_id),
            (table.row(rec.patient_id) >= 0.5).astype(float),
        )
