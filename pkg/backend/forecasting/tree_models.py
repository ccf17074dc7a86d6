"""
CART regression trees, bagged random forests and second-order gradient-boosted trees.

Split search is exact: candidate thresholds are midpoints between consecutive distinct
sorted values of a feature, scanned with cumulative sums. Rows go left when
x[feature] <= threshold. Equal scores keep the lowest feature index, then the lowest threshold.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .exceptions import EmptyDataError, FeatureCountMismatchError, InvalidParameterError, TargetCountMismatchError
from .model_core import Regressor, as_targets, derive_seed, register_estimator

logger = logging.getLogger(__name__)

LEAF = -1
CRITERIA = ("squared_error", "friedman_mse")
MAX_FEATURES_RULES = ("sqrt", "log2", "all")


@dataclass(frozen=True)
class DtParams:
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    criterion: str = "squared_error"
    max_features: Optional[str] = "all"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidParameterError(f"max_depth must be >= 1 or unbounded, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise InvalidParameterError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.criterion not in CRITERIA:
            raise InvalidParameterError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.max_features is not None and self.max_features not in MAX_FEATURES_RULES:
            raise InvalidParameterError(f"max_features must be one of {MAX_FEATURES_RULES}, got {self.max_features!r}")

    def feature_count(self, d):
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        if self.max_features == "log2":
            return max(1, int(math.log2(d))) if d > 1 else 1
        return d


@dataclass(frozen=True)
class RfParams:
    n_estimators: int = 100
    max_features: float = 1.0
    min_samples_leaf: int = 1
    bootstrap: bool = True
    max_depth: Optional[int] = None

    def __post_init__(self):
        if self.n_estimators < 1:
            raise InvalidParameterError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if not 0.0 < self.max_features <= 1.0:
            raise InvalidParameterError(f"max_features fraction must lie in (0, 1], got {self.max_features}")
        if self.min_samples_leaf < 1:
            raise InvalidParameterError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")

    def feature_count(self, d):
        return max(1, math.floor(self.max_features * d))


@dataclass(frozen=True)
class GbtParams:
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    gamma: float = 0.0
    reg_lambda: float = 1.0

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_depth < 1:
            raise InvalidParameterError("n_estimators and max_depth must be >= 1")
        if self.learning_rate < 0:
            raise InvalidParameterError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0.0 < self.subsample <= 1.0 and 0.0 < self.colsample_bytree <= 1.0):
            raise InvalidParameterError("subsample and colsample_bytree must lie in (0, 1]")
        if self.gamma < 0 or self.reg_lambda < 0:
            raise InvalidParameterError("gamma and reg_lambda must be >= 0")


class Tree:
    """Binary tree stored as parallel node arrays; leaves have feature == -1."""

    def __init__(self, n_features, feature, threshold, left, right, value):
        self.n_features = n_features
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float).reshape(len(self.feature), -1)

    @property
    def node_count(self):
        return len(self.feature)

    @property
    def leaf_count(self):
        return int(np.count_nonzero(self.feature == LEAF))

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise FeatureCountMismatchError(f"Tree expects {self.n_features} features, got shape {X.shape}")
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[nodes] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.left[current], self.right[current])
            active[rows] = self.feature[nodes[rows]] != LEAF
        return nodes

    def predict(self, X):
        return self.value[self.apply(X)]

    def to_nested(self, node=0):
        if self.feature[node] == LEAF:
            return {"leaf": self.value[node].tolist()}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_nested(int(self.left[node])),
            "right": self.to_nested(int(self.right[node])),
        }

    @classmethod
    def from_nested(cls, n_features, document):
        builder = _TreeBuilder()

        def visit(item):
            if "leaf" in item:
                return builder.leaf(item["leaf"])
            node = builder.split(item["feature"], item["threshold"])
            builder.attach(node, visit(item["left"]), visit(item["right"]))
            return node

        visit(document)
        return builder.build(n_features)


class _TreeBuilder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def _add(self, feature, threshold, value):
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.feature) - 1

    def leaf(self, value):
        return self._add(LEAF, 0.0, np.atleast_1d(np.asarray(value, dtype=float)))

    def split(self, feature, threshold):
        return self._add(int(feature), float(threshold), None)

    def attach(self, node, left, right):
        self.left[node], self.right[node] = left, right

    def build(self, n_features):
        width = max(len(v) for v in self.value if v is not None)
        values = [v if v is not None else np.zeros(width) for v in self.value]
        return Tree(n_features, self.feature, self.threshold, self.left, self.right, values)


def _midpoint(low, high):
    threshold = (low + high) / 2.0
    # Rounding can land the midpoint on the upper value, which would route it left.
    return low if threshold >= high else threshold


def _cart_split(X, Y, rows, features, criterion, min_leaf):
    """Best (score, feature, threshold) for a CART node, or None when no legal split improves it."""
    n = rows.size
    node_targets = Y[rows]
    centered = node_targets - node_targets.mean(axis=0)
    parent_impurity = float((centered**2).mean(axis=0).mean())
    n_left = np.arange(1, n)[:, None].astype(float)
    n_right = n - n_left
    size_ok = (n_left[:, 0] >= min_leaf) & (n_right[:, 0] >= min_leaf)

    best = None
    for feature in features:
        x = X[rows, feature]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ys = centered[order]
        sums = np.cumsum(ys, axis=0)
        left_sum = sums[:-1]
        right_sum = sums[-1] - left_sum
        if criterion == "squared_error":
            squares = np.cumsum(ys**2, axis=0)
            left_sse = squares[:-1] - left_sum**2 / n_left
            right_sse = (squares[-1] - squares[:-1]) - right_sum**2 / n_right
            scores = parent_impurity - ((left_sse + right_sse) / n).mean(axis=1)
        else:
            diff = left_sum / n_left - right_sum / n_right
            scores = (n_left * n_right / (n_left + n_right) * diff**2).mean(axis=1)
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        scores = np.where(valid, scores, -np.inf)
        position = int(np.argmax(scores))
        score = float(scores[position])
        if score > 0.0 and (best is None or score > best[0]):
            best = (score, int(feature), _midpoint(xs[position], xs[position + 1]))
    return best


def grow_cart(X, Y, rows, params: DtParams, max_features, rng):
    """Greedy top-down growth; leaves hold the per-target mean of their rows."""
    d = X.shape[1]
    builder = _TreeBuilder()
    root = builder.leaf(Y[rows].mean(axis=0))
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if node_rows.size < 2 * params.min_samples_leaf:
            continue
        if max_features < d:
            features = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            features = range(d)
        split = _cart_split(X, Y, node_rows, features, params.criterion, params.min_samples_leaf)
        if split is None:
            continue
        _, feature, threshold = split
        mask = X[node_rows, feature] <= threshold
        left_rows, right_rows = node_rows[mask], node_rows[~mask]
        builder.feature[node], builder.threshold[node] = feature, threshold
        left = builder.leaf(Y[left_rows].mean(axis=0))
        right = builder.leaf(Y[right_rows].mean(axis=0))
        builder.attach(node, left, right)
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.build(d)


def _check_training_data(X, Y):
    X = np.asarray(X, dtype=float)
    Y = as_targets(Y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDataError("Cannot fit a tree model on zero rows")
    if Y.shape[0] != X.shape[0]:
        raise EmptyDataError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


@register_estimator("dt")
class DecisionTreeRegressor(Regressor):
    def __init__(self, params: DtParams = DtParams(), seed=0):
        self.params = params
        self.seed = seed
        self.tree_ = None

    def fit(self, X, Y):
        X, Y = _check_training_data(X, Y)
        rng = np.random.default_rng(self.seed)
        rows = np.arange(X.shape[0])
        self.tree_ = grow_cart(X, Y, rows, self.params, self.params.feature_count(X.shape[1]), rng)
        return self

    def predict(self, X):
        return self.tree_.predict(X)

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "n_features": self.tree_.n_features,
            "tree": self.tree_.to_nested(),
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(DtParams(**payload["params"]), payload["seed"])
        model.tree_ = Tree.from_nested(payload["n_features"], payload["tree"])
        return model


def fit_decision_tree(X, Y, params: DtParams = DtParams(), seed=0):
    return DecisionTreeRegressor(params, seed).fit(X, Y).tree_


def predict_tree(tree: Tree, X):
    return tree.predict(X)


@register_estimator("rf")
class RandomForestRegressor(Regressor):
    """Bagged CART trees with a per-split random feature subset; prediction is the plain tree average."""

    def __init__(self, params: RfParams = RfParams(), seed=0):
        self.params = params
        self.seed = seed
        self.trees_ = []

    def fit(self, X, Y):
        X, Y = _check_training_data(X, Y)
        n, d = X.shape
        tree_params = DtParams(max_depth=self.params.max_depth, min_samples_leaf=self.params.min_samples_leaf)
        max_features = self.params.feature_count(d)
        self.trees_ = []
        for index in range(self.params.n_estimators):
            rng = np.random.default_rng(derive_seed(self.seed, "tree", index))
            rows = rng.integers(0, n, size=n) if self.params.bootstrap else np.arange(n)
            self.trees_.append(grow_cart(X, Y, rows, tree_params, max_features, rng))
        return self

    def predict(self, X):
        total = self.trees_[0].predict(X)
        for tree in self.trees_[1:]:
            total = total + tree.predict(X)
        return total / len(self.trees_)

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "n_features": self.trees_[0].n_features,
            "trees": [tree.to_nested() for tree in self.trees_],
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(RfParams(**payload["params"]), payload["seed"])
        model.trees_ = [Tree.from_nested(payload["n_features"], item) for item in payload["trees"]]
        return model


def fit_random_forest(X, Y, params: RfParams = RfParams(), seed=0):
    return RandomForestRegressor(params, seed).fit(X, Y)


def _gain_split(X, grad, hess, rows, features, reg_lambda, gamma):
    g = grad[rows]
    h = hess[rows]
    G, H = g.sum(), h.sum()
    parent = G * G / (H + reg_lambda)

    best = None
    for feature in features:
        x = X[rows, feature]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        left_g = np.cumsum(g[order])[:-1]
        left_h = np.cumsum(h[order])[:-1]
        right_g = G - left_g
        right_h = H - left_h
        gains = 0.5 * (left_g**2 / (left_h + reg_lambda) + right_g**2 / (right_h + reg_lambda) - parent) - gamma
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        gains = np.where(valid, gains, -np.inf)
        position = int(np.argmax(gains))
        gain = float(gains[position])
        if gain > 0.0 and (best is None or gain > best[0]):
            best = (gain, int(feature), _midpoint(xs[position], xs[position + 1]))
    return best


def grow_boosting_tree(X, grad, hess, rows, features, params: GbtParams):
    """Depth-limited tree on gradient statistics; leaf weight -G/(H+lambda), positive-gain splits only."""
    builder = _TreeBuilder()

    def weight(node_rows):
        return -grad[node_rows].sum() / (hess[node_rows].sum() + params.reg_lambda)

    root = builder.leaf(weight(rows))
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        if depth >= params.max_depth or node_rows.size < 2:
            continue
        split = _gain_split(X, grad, hess, node_rows, features, params.reg_lambda, params.gamma)
        if split is None:
            continue
        _, feature, threshold = split
        mask = X[node_rows, feature] <= threshold
        left_rows, right_rows = node_rows[mask], node_rows[~mask]
        builder.feature[node], builder.threshold[node] = feature, threshold
        left, right = builder.leaf(weight(left_rows)), builder.leaf(weight(right_rows))
        builder.attach(node, left, right)
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.build(X.shape[1])


@register_estimator("gbt")
class GradientBoostedRegressor(Regressor):
    """Single-target boosting on squared error (g = F - y, h = 1) starting from the training mean."""

    def __init__(self, params: GbtParams = GbtParams(), seed=0):
        self.params = params
        self.seed = seed
        self.base_score_ = 0.0
        self.trees_ = []
        self.train_loss_ = []

    def fit(self, X, y):
        X, Y = _check_training_data(X, y)
        if Y.shape[1] != 1:
            raise TargetCountMismatchError(f"Boosting fits one target, got {Y.shape[1]} columns")
        y = Y[:, 0]
        n, d = X.shape
        p = self.params
        rng = np.random.default_rng(self.seed)
        hess = np.ones(n)
        self.base_score_ = float(y.mean())
        F = np.full(n, self.base_score_)
        self.trees_ = []
        self.train_loss_ = [float(np.mean((F - y) ** 2))]
        row_count = max(1, math.floor(p.subsample * n))
        column_count = max(1, math.floor(p.colsample_bytree * d))

        for _ in range(p.n_estimators):
            grad = F - y
            rows = np.sort(rng.choice(n, size=row_count, replace=False)) if row_count < n else np.arange(n)
            features = np.sort(rng.choice(d, size=column_count, replace=False)) if column_count < d else np.arange(d)
            tree = grow_boosting_tree(X, grad, hess, rows, features, p)
            self.trees_.append(tree)
            F = F + p.learning_rate * tree.predict(X)[:, 0]
            self.train_loss_.append(float(np.mean((F - y) ** 2)))
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        F = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            F = F + self.params.learning_rate * tree.predict(X)[:, 0]
        return F.reshape(-1, 1)

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "base_score": self.base_score_,
            "n_features": self.trees_[0].n_features if self.trees_ else 0,
            "trees": [tree.to_nested() for tree in self.trees_],
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(GbtParams(**payload["params"]), payload["seed"])
        model.base_score_ = payload["base_score"]
        model.trees_ = [Tree.from_nested(payload["n_features"], item) for item in payload["trees"]]
        return model


def fit_gbt(X, y, params: GbtParams = GbtParams(), seed=0):
    return GradientBoostedRegressor(params, seed).fit(X, y)
