import numpy as np

from carebandit.models import (
    BoostedTreesModel,
    LogisticModel,
    fit_boosted_trees,
    fit_logistic,
    model_from_dict,
    sigmoid,
)


def toy_separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 1] > 0.0).astype(float)
    X[:, 1] += np.where(y == 1, 1.0, -1.0)  # widen the margin
    return X, y


def test_sigmoid_extremes_are_stable():
    vals = sigmoid(np.array([-800.0, -30.0, 0.0, 30.0, 800.0]))
    assert vals[0] == 0.0
    assert vals[2] == 0.5
    assert vals[4] == 1.0
    assert np.all((vals >= 0) & (vals <= 1))


def test_logistic_separable_training_accuracy():
    X, y = toy_separable()
    model = fit_logistic(X, y, l2=1e-4)
    pred = (model.predict_proba(X) >= 0.5).astype(float)
    assert np.mean(pred == y) == 1.0


def test_logistic_stationarity_of_fit():
    # independent check: the penalized-loss gradient vanishes at the optimum
    rng = np.random.default_rng(4)
    X = rng.normal(size=(120, 5))
    logits = 0.8 * X[:, 0] - 1.2 * X[:, 3] + 0.3
    y = (rng.uniform(size=120) < sigmoid(logits)).astype(float)
    l2 = 0.7
    model = fit_logistic(X, y, l2=l2)
    Z = (X - model.means) / model.scales
    prob = sigmoid(Z @ model.coef + model.intercept)
    grad_coef = Z.T @ (prob - y) + l2 * model.coef
    grad_intercept = np.sum(prob - y)
    assert np.abs(grad_coef).max() < 1e-6
    assert abs(grad_intercept) < 1e-6


def test_logistic_sample_weight_shifts_decision():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 3))
    y = (rng.uniform(size=200) < 0.15).astype(float)  # imbalanced, no signal
    up = np.where(y == 1, 10.0, 1.0)
    plain = fit_logistic(X, y, l2=1.0)
    weighted = fit_logistic(X, y, l2=1.0, sample_weight=up)
    assert weighted.predict_proba(X).mean() > plain.predict_proba(X).mean()


def test_logistic_round_trip_serialization():
    X, y = toy_separable(seed=3)
    model = fit_logistic(X, y, l2=0.5)
    clone = model_from_dict(model.to_dict())
    assert isinstance(clone, LogisticModel)
    assert np.allclose(clone.predict_proba(X), model.predict_proba(X))


def _xor_data(n=400, seed=7):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    y = ((X[:, 0] > 0) ^ (X[:, 2] > 0)).astype(float)
    return X, y


def test_boosting_learns_xor_where_logistic_cannot():
    X, y = _xor_data()
    boosted = fit_boosted_trees(X, y, n_trees=40, max_leaves=8, max_depth=3,
                                learning_rate=0.3, l1=0.0, l2=1.0)
    linear = fit_logistic(X, y, l2=1.0)
    acc_boost = np.mean((boosted.predict_proba(X) >= 0.5) == y)
    acc_linear = np.mean((linear.predict_proba(X) >= 0.5) == y)
    assert acc_boost > 0.95
    assert acc_linear < 0.7


def test_boosting_is_deterministic():
    X, y = _xor_data(seed=11)
    a = fit_boosted_trees(X, y, n_trees=10, max_leaves=6, max_depth=4)
    b = fit_boosted_trees(X, y, n_trees=10, max_leaves=6, max_depth=4)
    assert a.to_dict() == b.to_dict()


def test_boosting_respects_leaf_and_depth_limits():
    X, y = _xor_data(seed=5)
    model = fit_boosted_trees(X, y, n_trees=5, max_leaves=4, max_depth=2)

    def walk(node, depth):
        if node.is_leaf:
            return 1, depth
        l_leaves, l_depth = walk(node.left, depth + 1)
        r_leaves, r_depth = walk(node.right, depth + 1)
        return l_leaves + r_leaves, max(l_depth, r_depth)

    for tree in model.trees:
        leaves, depth = walk(tree, 0)
        assert leaves <= 4
        assert depth <= 2


def test_boosting_constant_on_featureless_labels():
    # constant column: no split can gain, prediction is the base rate
    X = np.ones((30, 2))
    y = np.array([1.0] * 24 + [0.0] * 6)
    model = fit_boosted_trees(X, y, n_trees=5, max_leaves=4, max_depth=3)
    assert model.is_constant
    probs = model.predict_proba(X)
    assert np.allclose(probs, probs[0])
    assert abs(probs[0] - 0.8) < 0.05


def test_boosting_round_trip_serialization():
    X, y = _xor_data(seed=2)
    model = fit_boosted_trees(X, y, n_trees=8, max_leaves=6, max_depth=3)
    clone = model_from_dict(model.to_dict())
    assert isinstance(clone, BoostedTreesModel)
    assert np.allclose(clone.predict_proba(X), model.predict_proba(X))


def test_boosting_training_loss_decreases():
    X, y = _xor_data(seed=9)
    losses = []
    for k in (1, 5, 20):
        model = fit_boosted_trees(X, y, n_trees=k, max_leaves=8, max_depth=3,
                                  learning_rate=0.3)
        p = np.clip(model.predict_proba(X), 1e-12, 1 - 1e-12)
        losses.append(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    assert losses[2] < losses[1] < losses[0]
