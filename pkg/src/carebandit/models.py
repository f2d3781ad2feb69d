"""Reward-model families fitted to logged outcomes.

Two in-repo families cover the model-selection protocol: an L2-penalized
logistic regression and gradient-boosted regression trees driven by the
logistic loss (Newton boosting with shrinkage, leaf-wise growth, and
L1/L2 penalties applied in leaf-value computation).  Both fits are fully
deterministic: the tree split scan walks features in ascending index
order with a first-best tie-break.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))


def _logit(p):
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return np.log(p / (1.0 - p))


# ---------------------------------------------------------------------------
# Logistic regression (IRLS)
# ---------------------------------------------------------------------------


@dataclass
class LogisticModel:
    """L2-penalized logistic regression on internally standardized features."""

    coef: np.ndarray
    intercept: float
    means: np.ndarray
    scales: np.ndarray
    l2: float
    is_constant: bool = False

    def decision_function(self, X):
        Z = (np.asarray(X, dtype=np.float64) - self.means) / self.scales
        return Z @ self.coef + self.intercept

    def predict_proba(self, X):
        return sigmoid(self.decision_function(X))

    def to_dict(self):
        return {
            "kind": "logistic",
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "l2": self.l2,
            "is_constant": self.is_constant,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            coef=np.asarray(obj["coef"], dtype=np.float64),
            intercept=float(obj["intercept"]),
            means=np.asarray(obj["means"], dtype=np.float64),
            scales=np.asarray(obj["scales"], dtype=np.float64),
            l2=float(obj["l2"]),
            is_constant=bool(obj["is_constant"]),
        )


def fit_logistic(X, y, l2=1.0, sample_weight=None, max_iter=100, tol=1e-10):
    """Fit by Newton iterations on the weighted penalized log-likelihood.

    The intercept is unpenalized; the L2 penalty acts on standardized
    coefficients so column scales do not distort it.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)

    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0
    Z = (X - means) / scales

    beta = np.zeros(p)
    intercept = float(_logit(np.average(y, weights=w)))
    for _ in range(max_iter):
        eta = Z @ beta + intercept
        prob = sigmoid(eta)
        grad = Z.T @ (w * (prob - y)) + l2 * beta
        grad0 = float(np.sum(w * (prob - y)))
        curv = np.clip(w * prob * (1.0 - prob), 1e-12, None)
        H = Z.T @ (curv[:, None] * Z) + l2 * np.eye(p)
        Hc = Z.T @ curv
        # bordered Hessian including the intercept row/column
        full = np.empty((p + 1, p + 1))
        full[:p, :p] = H
        full[:p, p] = Hc
        full[p, :p] = Hc
        full[p, p] = float(curv.sum())
        step = np.linalg.solve(full, np.concatenate([grad, [grad0]]))
        beta -= step[:p]
        intercept -= step[p]
        if np.abs(step).max() < tol:
            break
    return LogisticModel(
        coef=beta,
        intercept=float(intercept),
        means=means,
        scales=scales,
        l2=float(l2),
        is_constant=bool(np.allclose(beta, 0.0)),
    )


# ---------------------------------------------------------------------------
# Gradient-boosted trees (logistic loss, Newton steps)
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self):
        return self.feature < 0

    def to_dict(self):
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj):
        if "value" in obj:
            return cls(value=float(obj["value"]))
        return cls(
            feature=int(obj["feature"]),
            threshold=float(obj["threshold"]),
            left=cls.from_dict(obj["left"]),
            right=cls.from_dict(obj["right"]),
        )


def _tree_predict(root, X, out):
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        go_left = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))


def _leaf_weight(G, H, l1, l2):
    # soft-thresholded Newton step, as in penalized boosting objectives
    if G > l1:
        num = G - l1
    elif G < -l1:
        num = G + l1
    else:
        return 0.0
    return -num / (H + l2)


def _leaf_score(G, H, l1, l2):
    shrunk = np.maximum(np.abs(G) - l1, 0.0)
    return shrunk * shrunk / (H + l2)


def _best_split(X, g, h, idx, l1, l2):
    """Best (gain, feature, threshold) for one node; None when no split gains."""
    G = float(g[idx].sum())
    H = float(h[idx].sum())
    parent = _leaf_score(G, H, l1, l2)
    best = None
    for j in range(X.shape[1]):
        col = X[idx, j]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        if vals[0] == vals[-1]:
            continue
        g_cum = np.cumsum(g[idx][order])
        h_cum = np.cumsum(h[idx][order])
        # split positions: between distinct consecutive values only
        cut = np.nonzero(vals[:-1] < vals[1:])[0]
        GL = g_cum[cut]
        HL = h_cum[cut]
        gains = _leaf_score(GL, HL, l1, l2) + _leaf_score(G - GL, H - HL, l1, l2) - parent
        pos = int(np.argmax(gains))  # first max: earliest threshold wins ties
        if best is None or gains[pos] > best[0]:
            threshold = (vals[cut[pos]] + vals[cut[pos] + 1]) / 2.0
            best = (float(gains[pos]), j, threshold)
    if best is None or best[0] <= 0.0:
        return None
    return best


def _grow_tree(X, g, h, max_depth, max_leaves, l1, l2):
    root_idx = np.arange(X.shape[0])
    root = TreeNode(value=_leaf_weight(float(g.sum()), float(h.sum()), l1, l2))
    candidates = []
    counter = 0

    def push(node, idx, depth):
        nonlocal counter
        if depth >= max_depth or idx.size < 2:
            return
        split = _best_split(X, g, h, idx, l1, l2)
        if split is not None:
            heapq.heappush(candidates, (-split[0], counter, node, idx, depth, split))
            counter += 1

    push(root, root_idx, 0)
    n_leaves = 1
    while candidates and n_leaves < max_leaves:
        _, _, node, idx, depth, (gain, feature, threshold) = heapq.heappop(candidates)
        go_left = X[idx, feature] <= threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        node.feature = feature
        node.threshold = threshold
        node.left = TreeNode(
            value=_leaf_weight(float(g[left_idx].sum()), float(h[left_idx].sum()), l1, l2)
        )
        node.right = TreeNode(
            value=_leaf_weight(float(g[right_idx].sum()), float(h[right_idx].sum()), l1, l2)
        )
        node.value = 0.0
        n_leaves += 1
        push(node.left, left_idx, depth + 1)
        push(node.right, right_idx, depth + 1)
    return root


@dataclass
class BoostedTreesModel:
    """Additive tree model on the logit scale: init + lr * sum(tree outputs)."""

    init_score: float
    learning_rate: float
    trees: list = field(default_factory=list)

    @property
    def is_constant(self):
        return all(tree.is_leaf for tree in self.trees)

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        score = np.full(X.shape[0], self.init_score)
        buf = np.empty(X.shape[0])
        for tree in self.trees:
            _tree_predict(tree, X, buf)
            score += self.learning_rate * buf
        return score

    def predict_proba(self, X):
        return sigmoid(self.decision_function(X))

    def to_dict(self):
        return {
            "kind": "boosted_trees",
            "init_score": self.init_score,
            "learning_rate": self.learning_rate,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            init_score=float(obj["init_score"]),
            learning_rate=float(obj["learning_rate"]),
            trees=[TreeNode.from_dict(t) for t in obj["trees"]],
        )


def fit_boosted_trees(
    X,
    y,
    n_trees=50,
    max_leaves=30,
    max_depth=20,
    learning_rate=0.1,
    l1=1.0,
    l2=1.0,
    sample_weight=None,
):
    """Newton boosting on the logistic loss.

    Each round fits a regression tree to the per-sample gradients with
    hessian-weighted leaf values; shrinkage equals the learning rate.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)

    model = BoostedTreesModel(
        init_score=float(_logit(np.average(y, weights=w))),
        learning_rate=float(learning_rate),
    )
    score = np.full(n, model.init_score)
    buf = np.empty(n)
    for _ in range(n_trees):
        prob = sigmoid(score)
        g = w * (prob - y)
        h = np.clip(w * prob * (1.0 - prob), 1e-12, None)
        tree = _grow_tree(X, g, h, max_depth, max_leaves, l1, l2)
        model.trees.append(tree)
        _tree_predict(tree, X, buf)
        score += model.learning_rate * buf
    return model


def model_from_dict(obj):
    if obj["kind"] == "logistic":
        return LogisticModel.from_dict(obj)
    if obj["kind"] == "boosted_trees":
        return BoostedTreesModel.from_dict(obj)
    raise ValueError(f"unknown model kind {obj['kind']!r}")
