import numpy as np
import pytest

from carebandit.errors import ConfigurationError
from carebandit.linalg import REINVERSION_INTERVAL, RidgeState


def direct_state(updates, d, lam):
    """Independent oracle: rebuild B and f from scratch and solve directly."""
    B = lam * np.eye(d)
    f = np.zeros(d)
    for b, r in updates:
        B = B + np.outer(b, b)
        f = f + r * b
    return B, np.linalg.inv(B), np.linalg.solve(B, f)


def test_init_identity():
    s = RidgeState(2, 1.0)
    assert np.array_equal(s.B, np.eye(2))
    assert np.array_equal(s.mu, np.zeros(2))
    assert s.t == 0


def test_init_scalar_inverse():
    s = RidgeState(3, 0.5)
    assert np.array_equal(s.Binv, 2.0 * np.eye(3))
    assert np.array_equal(s.f, np.zeros(3))


def test_init_large_diagonal():
    s = RidgeState(125, 1.0)
    assert np.abs(s.B @ s.Binv - np.eye(125)).max() == 0.0


@pytest.mark.parametrize("d,lam", [(0, 1.0), (-3, 1.0), (2, 0.0), (2, -1.0), (2.5, 1.0)])
def test_init_rejects_bad_config(d, lam):
    with pytest.raises(ConfigurationError):
        RidgeState(d, lam)


def test_update_zero_vector_is_identity_but_counts():
    s = RidgeState(4, 2.0)
    before = (s.B.copy(), s.Binv.copy(), s.mu.copy())
    s.update(np.zeros(4), 5.0)
    assert np.array_equal(s.B, before[0])
    assert np.array_equal(s.Binv, before[1])
    assert np.array_equal(s.mu, before[2])
    assert s.t == 1


def test_update_scalar_case():
    s = RidgeState(1, 1.0)
    s.update([1.0], 1.0)
    assert s.B[0, 0] == 2.0
    assert s.mu[0] == 0.5


def test_update_rejects_nonfinite_and_leaves_state_unchanged():
    s = RidgeState(2, 1.0)
    s.update([1.0, 0.5], 1.0)
    snapshot = (s.B.copy(), s.Binv.copy(), s.f.copy(), s.mu.copy(), s.t)
    with pytest.raises(ValueError):
        s.update([np.nan, 0.0], 1.0)
    with pytest.raises(ValueError):
        s.update([1.0, 2.0], np.inf)
    assert np.array_equal(s.B, snapshot[0])
    assert np.array_equal(s.Binv, snapshot[1])
    assert np.array_equal(s.f, snapshot[2])
    assert np.array_equal(s.mu, snapshot[3])
    assert s.t == snapshot[4]


def test_update_rejects_wrong_dimension():
    s = RidgeState(3, 1.0)
    with pytest.raises(ValueError):
        s.update([1.0, 2.0], 0.0)


def test_maintained_inverse_matches_direct_oracle():
    rng = np.random.default_rng(7)
    d = 25
    s = RidgeState(d, 1.0)
    updates = []
    for step in range(1000):
        b = rng.normal(size=d)
        r = rng.normal()
        updates.append((b, r))
        s.update(b, r)
        if (step + 1) % 200 == 0:
            B, Binv, mu = direct_state(updates, d, 1.0)
            assert np.abs(s.Binv - Binv).max() <= 1e-8
            assert np.abs(s.mu - mu).max() <= 1e-8


def test_periodic_reinversion_triggers():
    rng = np.random.default_rng(3)
    d = 4
    s = RidgeState(d, 1.0)
    for _ in range(REINVERSION_INTERVAL + 5):
        s.update(rng.normal(size=d), rng.normal())
    assert s.t == REINVERSION_INTERVAL + 5
    assert np.abs(s.B @ s.Binv - np.eye(d)).max() <= 1e-8


def test_confidence_width_fresh_state():
    s = RidgeState(3, 1.0)
    e1 = np.array([1.0, 0.0, 0.0])
    assert s.confidence_width(e1) == pytest.approx(1.0)
    s4 = RidgeState(3, 4.0)
    assert s4.confidence_width(e1) == pytest.approx(0.5)


def test_confidence_width_closed_form_after_one_update():
    s = RidgeState(2, 1.0)
    e1 = np.array([1.0, 0.0])
    s.update(e1, 0.3)
    # rank-1 update of the identity: (I + e1 e1^T)^-1 has 1/2 in the (0,0) cell
    assert s.confidence_width(e1) == pytest.approx(np.sqrt(0.5))


def test_confidence_width_weakly_monotone_in_updates():
    rng = np.random.default_rng(11)
    s = RidgeState(6, 1.0)
    probe = rng.normal(size=6)
    widths = [s.confidence_width(probe)]
    for _ in range(200):
        s.update(rng.normal(size=6), rng.normal())
        widths.append(s.confidence_width(probe))
    diffs = np.diff(widths)
    assert np.all(diffs <= 1e-12)


def test_ucb_scores_matches_per_row_formula():
    rng = np.random.default_rng(5)
    d = 8
    s = RidgeState(d, 1.0)
    for _ in range(40):
        s.update(rng.normal(size=d), rng.normal())
    phi = rng.normal(size=(7, d))
    batch = s.ucb_scores(phi, 0.4)
    singles = [s.predict(row) + 0.4 * s.confidence_width(row) for row in phi]
    assert np.allclose(batch, singles, atol=1e-10)


def test_sample_coefficients_deterministic_given_seed():
    rng = np.random.default_rng(2)
    s = RidgeState(5, 1.0)
    for _ in range(10):
        s.update(rng.normal(size=5), rng.normal())
    a = s.sample_coefficients(0.7, np.random.default_rng(123))
    b = s.sample_coefficients(0.7, np.random.default_rng(123))
    assert np.array_equal(a, b)


def test_sample_coefficients_degenerate_noise_limit():
    rng = np.random.default_rng(9)
    s = RidgeState(4, 1.0)
    for _ in range(20):
        s.update(rng.normal(size=4), rng.normal())
    v = 1e-12
    draw = s.sample_coefficients(v, np.random.default_rng(0))
    # ||L z|| is bounded by sqrt(trace(Binv)) * ||z||; stay well inside it
    bound = v * np.sqrt(np.trace(s.Binv)) * 10.0
    assert np.abs(draw - s.mu).max() <= bound


def test_sample_coefficients_monte_carlo_moments():
    s = RidgeState(2, 1.0)
    rng = np.random.default_rng(42)
    n = 100_000
    draws = np.stack([s.sample_coefficients(1.0, rng) for _ in range(n)])
    mean = draws.mean(axis=0)
    cov = np.cov(draws.T)
    assert np.abs(mean - s.mu).max() <= 0.02
    assert np.abs(cov - np.eye(2)).max() <= 0.02


def test_sample_coefficients_rejects_bad_scale():
    s = RidgeState(2, 1.0)
    with pytest.raises(ConfigurationError):
        s.sample_coefficients(0.0, np.random.default_rng(0))
