import numpy as np
import pytest

from carebandit.features import Variant, fit_feature_spec
from carebandit.oracle import FullRewardTable, RewardMode
from carebandit.policies import PolicyConfig, PolicyKind
from carebandit.simulator import (
    QuantileBand,
    RegretTrace,
    ReplayConfig,
    ReplayContext,
    SamplingMode,
    aggregate_quantiles,
    grid_search,
    instantaneous_regret,
    run_replay,
    run_replications,
)
from carebandit.synth import SynthConfig, generate_cohort, truth_reward_table
from carebandit.errors import ConfigurationError


def small_experiment(seed=21, n=60, mode=RewardMode.PROBABILITY):
    cohort, truth = generate_cohort(SynthConfig(seed=seed, n_patients=n))
    table = truth_reward_table(truth, cohort, mode=mode)
    return cohort, table


def constant_table(cohort, value=0.7):
    rows = {}
    best = {}
    for rec in cohort:
        aset = cohort.action_set_for(rec)
        rows[rec.patient_id] = np.full(len(aset), value)
        best[rec.patient_id] = 0
    return FullRewardTable(rows=rows, best=best, mode=RewardMode.PROBABILITY)


# ---------------------------------------------------------------------------
# instantaneous_regret
# ---------------------------------------------------------------------------


def test_instantaneous_regret_trivials():
    assert instantaneous_regret(np.array([0.2, 0.9, 0.4]), 1) == 0.0
    assert instantaneous_regret(np.array([1.0, 0.0]), 1) == 1.0


def test_instantaneous_regret_matches_naive_scan():
    rng = np.random.default_rng(2)
    for _ in range(50):
        row = rng.random(int(rng.integers(1, 12)))
        chosen = int(rng.integers(0, row.size))
        naive = max(row) - row[chosen]
        assert instantaneous_regret(row, chosen) == pytest.approx(naive, abs=0)


# ---------------------------------------------------------------------------
# run_replay
# ---------------------------------------------------------------------------


def test_oracle_best_has_identically_zero_regret():
    cohort, table = small_experiment()
    for seed in (0, 1, 2):
        trace = run_replay(
            cohort, table, PolicyConfig(PolicyKind.ORACLE_BEST), horizon=300, seed=seed
        )
        assert np.all(trace.inst_regret == 0.0)
        assert np.all(trace.cum_regret == 0.0)


def test_logged_cohort_order_matches_direct_summation():
    cohort, table = small_experiment()
    n = len(cohort.records)
    trace = run_replay(
        cohort, table, PolicyConfig(PolicyKind.LOGGED), horizon=n, seed=0,
        sampling=SamplingMode.COHORT_ORDER,
    )
    expected = 0.0
    for rec in cohort:
        aset = cohort.action_set_for(rec)
        expected += table.row(rec.patient_id)[aset.index_of(rec.intervention_mask)]
    assert trace.final_cum_reward == pytest.approx(expected, abs=1e-9)
    assert list(trace.patient_ids) == [rec.patient_id for rec in cohort]


def test_replay_is_deterministic_and_csv_stable(tmp_path):
    cohort, table = small_experiment()
    spec = fit_feature_spec(cohort, Variant.MAIN_EFFECTS)
    config = PolicyConfig(
        PolicyKind.LINUCB, exploration=0.3, variant=Variant.MAIN_EFFECTS
    )
    a = run_replay(cohort, table, config, horizon=150, seed=11, feature_spec=spec)
    b = run_replay(cohort, table, config, horizon=150, seed=11, feature_spec=spec)
    np.testing.assert_array_equal(a.chosen, b.chosen)
    np.testing.assert_array_equal(a.cum_regret, b.cum_regret)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    a.save(pa)
    b.save(pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_policies_at_same_seed_face_the_same_patients():
    cohort, table = small_experiment()
    random_trace = run_replay(
        cohort, table, PolicyConfig(PolicyKind.RANDOM), horizon=200, seed=5
    )
    logged_trace = run_replay(
        cohort, table, PolicyConfig(PolicyKind.LOGGED), horizon=200, seed=5
    )
    np.testing.assert_array_equal(random_trace.patient_ids, logged_trace.patient_ids)


def test_trace_invariants_hold_for_a_learning_policy():
    cohort, table = small_experiment()
    spec = fit_feature_spec(cohort, Variant.MAIN_EFFECTS)
    trace = run_replay(
        cohort, table,
        PolicyConfig(PolicyKind.LINTS, exploration=0.3, variant=Variant.MAIN_EFFECTS),
        horizon=400, seed=3, feature_spec=spec,
    )
    assert np.all(trace.inst_regret >= 0.0)
    assert np.all(np.diff(trace.cum_regret) >= 0.0)
    np.testing.assert_allclose(trace.cum_regret, np.cumsum(trace.inst_regret))


def test_trace_round_trip(tmp_path):
    cohort, table = small_experiment()
    trace = run_replay(
        cohort, table, PolicyConfig(PolicyKind.RANDOM), horizon=120, seed=9
    )
    path = tmp_path / "trace.csv"
    trace.save(path)
    loaded = RegretTrace.load(path, label=trace.label)
    np.testing.assert_array_equal(loaded.patient_ids, trace.patient_ids)
    np.testing.assert_array_equal(loaded.chosen, trace.chosen)
    np.testing.assert_array_equal(loaded.inst_regret, trace.inst_regret)
    np.testing.assert_array_equal(loaded.cum_reward, trace.cum_reward)


def test_random_policy_slope_is_asymptotically_constant():
    cohort, table = small_experiment(mode=RewardMode.BINARY)
    config = ReplayConfig(horizon=2000, replications=5, master_seed=17)
    traces = run_replications(cohort, table, PolicyConfig(PolicyKind.RANDOM), config)
    band = aggregate_quantiles(traces)
    t = config.horizon
    full_slope = band.median[-1] / t
    last_half_slope = (band.median[-1] - band.median[t // 2 - 1]) / (t - t // 2)
    assert abs(last_half_slope - full_slope) <= 0.25 * full_slope


# ---------------------------------------------------------------------------
# run_replications / grid_search
# ---------------------------------------------------------------------------


def test_replications_are_reproducible_but_not_identical():
    cohort, table = small_experiment()
    config = ReplayConfig(horizon=100, replications=3, master_seed=4)
    policy = PolicyConfig(PolicyKind.RANDOM)
    first = run_replications(cohort, table, policy, config)
    second = run_replications(cohort, table, policy, config)
    assert len(first) == 3
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.chosen, b.chosen)
    assert not np.array_equal(first[0].patient_ids, first[1].patient_ids)


def test_grid_search_singleton_returns_its_value():
    cohort, table = small_experiment()
    spec = fit_feature_spec(cohort, Variant.MAIN_EFFECTS)
    config = ReplayConfig(horizon=80, replications=2, master_seed=1, grid=(0.3,))
    best, traces = grid_search(
        cohort, table, PolicyKind.LINUCB, config, feature_spec=spec
    )
    assert best == 0.3
    assert set(traces) == {0.3}
    assert len(traces[0.3]) == 2


def test_grid_search_tie_breaks_to_smallest_value():
    cohort, _ = small_experiment()
    table = constant_table(cohort)
    spec = fit_feature_spec(cohort, Variant.MAIN_EFFECTS)
    config = ReplayConfig(horizon=60, replications=2, master_seed=2)
    best, traces = grid_search(
        cohort, table, PolicyKind.LINUCB, config, feature_spec=spec
    )
    finals = {
        v: np.median([t.final_cum_reward for t in ts]) for v, ts in traces.items()
    }
    assert len(set(finals.values())) == 1
    assert best == 0.1


def test_grid_search_matches_exhaustive_comparison():
    cohort, table = small_experiment(seed=33)
    spec = fit_feature_spec(cohort, Variant.MAIN_EFFECTS)
    config = ReplayConfig(horizon=250, replications=3, master_seed=8)
    best, traces = grid_search(
        cohort, table, PolicyKind.LINTS, config, feature_spec=spec
    )
    medians = {
        v: float(np.median([t.final_cum_reward for t in ts]))
        for v, ts in traces.items()
    }
    exhaustive = max(sorted(medians), key=lambda v: (medians[v], -v))
    assert best == exhaustive


def test_grid_search_rejects_baseline_kinds():
    cohort, table = small_experiment()
    with pytest.raises(ConfigurationError, match="learning policies"):
        grid_search(cohort, table, PolicyKind.RANDOM, ReplayConfig())


# ---------------------------------------------------------------------------
# aggregate_quantiles
# ---------------------------------------------------------------------------


def fake_trace(cum_regret, label="x"):
    cum = np.asarray(cum_regret, dtype=np.float64)
    inst = np.diff(np.concatenate([[0.0], cum]))
    t = cum.size
    zeros = np.zeros(t, dtype=np.int64)
    return RegretTrace(
        label=label, patient_ids=zeros, chosen=zeros, best=zeros,
        inst_regret=inst, cum_regret=cum, cum_reward=np.zeros(t),
    )


def test_single_trace_aggregation_is_degenerate():
    trace = fake_trace([1.0, 2.0, 2.5])
    band = aggregate_quantiles([trace])
    np.testing.assert_array_equal(band.p25, trace.cum_regret)
    np.testing.assert_array_equal(band.median, trace.cum_regret)
    np.testing.assert_array_equal(band.p75, trace.cum_regret)


def test_five_constant_traces_order_statistics():
    traces = [fake_trace([float(v)] * 4) for v in (1, 2, 3, 4, 5)]
    band = aggregate_quantiles(traces)
    np.testing.assert_array_equal(band.median, np.full(4, 3.0))
    np.testing.assert_array_equal(band.p25, np.full(4, 2.0))
    np.testing.assert_array_equal(band.p75, np.full(4, 4.0))


def test_quantiles_match_naive_recomputation():
    rng = np.random.default_rng(6)
    traces = [fake_trace(np.cumsum(rng.random(30))) for _ in range(5)]
    band = aggregate_quantiles(traces)
    stacked = np.stack([t.cum_regret for t in traces])
    for step in range(30):
        col = np.sort(stacked[:, step])
        assert band.median[step] == pytest.approx(np.percentile(col, 50))
        assert band.p25[step] == pytest.approx(np.percentile(col, 25))
        assert band.p75[step] == pytest.approx(np.percentile(col, 75))
        assert band.p25[step] <= band.median[step] <= band.p75[step]


def test_mismatched_horizons_are_rejected():
    with pytest.raises(ValueError, match="horizon"):
        aggregate_quantiles([fake_trace([1.0, 2.0]), fake_trace([1.0, 2.0, 3.0])])


def test_band_round_trip_and_ordering_validation(tmp_path):
    band = aggregate_quantiles(
        [fake_trace(np.cumsum(np.random.default_rng(8).random(12))) for _ in range(5)]
    )
    path = tmp_path / "band.csv"
    band.save(path)
    loaded = QuantileBand.load(path, label=band.label)
    np.testing.assert_array_equal(loaded.median, band.median)
    with pytest.raises(ValueError, match="ordered"):
        QuantileBand(label="bad", p25=np.array([2.0]), median=np.array([1.0]),
                     p75=np.array([3.0]))


def test_replay_config_validation():
    with pytest.raises(ConfigurationError, match="horizon"):
        ReplayConfig(horizon=0)
    with pytest.raises(ConfigurationError, match="replications"):
        ReplayConfig(replications=0)
    with pytest.raises(ConfigurationError, match="grid"):
        ReplayConfig(grid=())
