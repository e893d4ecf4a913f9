"""Reference baselines: logistic regression and a random forest.

Both are written against plain numpy so results are reproducible from
a seed alone. Hyperparameter defaults are fixed and documented here:
LR trains full-batch gradient descent (rate 1e-2, 500 epochs, l2 1e-4);
the forest grows 200 CART trees (Gini impurity, depth cap 16, minimum
leaf 2, sqrt-of-features sampling per split, bootstrap resampling) and
scores by the fraction of trees voting positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import _sigmoid


@dataclass
class LogisticRegressionGD:
    learning_rate: float = 1e-2
    epochs: int = 500
    l2_penalty: float = 1e-4

    weights_: np.ndarray | None = field(default=None, repr=False)
    bias_: float = 0.0

    def fit(self, x, y) -> "LogisticRegressionGD":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n, dim = x.shape
        w = np.zeros(dim)
        b = 0.0
        for _ in range(self.epochs):
            p = _sigmoid(x @ w + b)
            err = (p - y) / n
            w -= self.learning_rate * (x.T @ err + 2.0 * self.l2_penalty * w)
            b -= self.learning_rate * float(err.sum())
        self.weights_ = w
        self.bias_ = b
        return self

    def predict_proba(self, x) -> np.ndarray:
        if self.weights_ is None:
            raise RuntimeError("fit before predict")
        return _sigmoid(np.asarray(x, dtype=np.float64) @ self.weights_ + self.bias_)


def _gini_best_split(x_col: np.ndarray, y: np.ndarray) -> tuple[float, float] | None:
    """Best threshold for one feature by Gini gain, or None if the
    column is constant. Thresholds are midpoints between adjacent
    distinct values; returns (impurity_after, threshold)."""
    order = np.argsort(x_col, kind="mergesort")
    xs = x_col[order]
    ys = y[order]
    n = xs.shape[0]
    pos_prefix = np.cumsum(ys)
    total_pos = pos_prefix[-1]

    cut = np.nonzero(xs[:-1] < xs[1:])[0]  # split between i and i+1
    if cut.size == 0:
        return None
    n_left = cut + 1
    n_right = n - n_left
    pos_left = pos_prefix[cut]
    pos_right = total_pos - pos_left
    p_left = pos_left / n_left
    p_right = pos_right / n_right
    gini_left = 2.0 * p_left * (1.0 - p_left)
    gini_right = 2.0 * p_right * (1.0 - p_right)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(weighted))
    threshold = (xs[cut[best]] + xs[cut[best] + 1]) / 2.0
    return float(weighted[best]), threshold


@dataclass
class _Node:
    prediction: int | None = None
    feature: int | None = None
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None


class DecisionTree:
    """CART classifier on {0,1} labels with Gini impurity."""

    def __init__(self, max_depth: int = 16, min_leaf: int = 2,
                 n_candidate_features: int | None = None,
                 rng: np.random.Generator | None = None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_candidate_features = n_candidate_features
        self.rng = rng or np.random.default_rng(0)
        self.root: _Node | None = None

    def fit(self, x, y) -> "DecisionTree":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        self.root = self._grow(x, y, depth=0)
        return self

    def _grow(self, x: np.ndarray, y: np.ndarray, depth: int) -> _Node:
        n, dim = x.shape
        majority = int(np.sum(y) * 2 >= n)
        pure = np.all(y == y[0])
        if pure or depth >= self.max_depth or n < 2 * self.min_leaf:
            return _Node(prediction=majority)

        k = self.n_candidate_features or dim
        k = min(k, dim)
        candidates = self.rng.choice(dim, size=k, replace=False) if k < dim else np.arange(dim)

        best = None
        for f in candidates:
            scored = _gini_best_split(x[:, f], y)
            if scored is None:
                continue
            impurity, threshold = scored
            left_mask = x[:, f] <= threshold
            if left_mask.sum() < self.min_leaf or (~left_mask).sum() < self.min_leaf:
                continue
            if best is None or impurity < best[0]:
                best = (impurity, int(f), threshold, left_mask)
        if best is None:
            return _Node(prediction=majority)

        _, feature, threshold, left_mask = best
        return _Node(
            feature=feature,
            threshold=threshold,
            left=self._grow(x[left_mask], y[left_mask], depth + 1),
            right=self._grow(x[~left_mask], y[~left_mask], depth + 1),
        )

    def predict(self, x) -> np.ndarray:
        if self.root is None:
            raise RuntimeError("fit before predict")
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(x.shape[0], dtype=np.int64)
        for i in range(x.shape[0]):
            node = self.root
            while node.prediction is None:
                node = node.left if x[i, node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out


class RandomForest:
    """Bagged CART trees; probability is the positive-vote fraction."""

    def __init__(self, n_trees: int = 200, max_depth: int = 16, min_leaf: int = 2,
                 seed: int = 0, bootstrap: bool = True):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.bootstrap = bootstrap
        self.trees: list[DecisionTree] = []

    def fit(self, x, y) -> "RandomForest":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        n, dim = x.shape
        k = max(1, int(np.sqrt(dim)))
        rng = np.random.default_rng(self.seed)
        self.trees = []
        for _ in range(self.n_trees):
            tree_rng = np.random.default_rng(rng.integers(2**63))
            if self.bootstrap:
                idx = tree_rng.integers(0, n, size=n)
                xt, yt = x[idx], y[idx]
            else:
                xt, yt = x, y
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_leaf=self.min_leaf,
                n_candidate_features=k,
                rng=tree_rng,
            )
            self.trees.append(tree.fit(xt, yt))
        return self

    def predict_proba(self, x) -> np.ndarray:
        if not self.trees:
            raise RuntimeError("fit before predict")
        x = np.asarray(x, dtype=np.float64)
        votes = np.zeros(x.shape[0], dtype=np.float64)
        for tree in self.trees:
            votes += tree.predict(x)
        return votes / len(self.trees)
