"""
Uniform regressor abstraction, multi-output wrapping, expanding-window time-series
cross-validation and grid search with average-RMSE selection.
"""

import hashlib
import itertools
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from .evaluation import average_rmse, build_report
from .exceptions import EmptyDataError, EmptyGridError, InvalidParameterError, TargetCountMismatchError, TooFewSamplesError
from .features import Standardizer

logger = logging.getLogger(__name__)

TABULAR = "tabular"
SEQUENCE = "sequence"

ESTIMATORS = {}


def register_estimator(kind):
    def decorator(cls):
        cls.kind = kind
        ESTIMATORS[kind] = cls
        return cls

    return decorator


def load_estimator(payload):
    try:
        cls = ESTIMATORS[payload["kind"]]
    except KeyError:
        raise InvalidParameterError(f"Unknown estimator kind {payload.get('kind')!r}")
    return cls.from_payload(payload)


def as_targets(Y):
    """View targets as an (n, m) matrix."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        return Y.reshape(-1, 1)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise TargetCountMismatchError(f"Targets must be a vector or an (n, m) matrix, got shape {Y.shape}")
    return Y


class Regressor(ABC):
    """Fit on (X, Y) and predict a matrix with one column per target."""

    kind = "regressor"

    @abstractmethod
    def fit(self, X, Y):
        ...

    @abstractmethod
    def predict(self, X):
        ...

    @abstractmethod
    def to_payload(self) -> Dict[str, Any]:
        ...

    @classmethod
    @abstractmethod
    def from_payload(cls, payload):
        ...


@register_estimator("mean")
class MeanRegressor(Regressor):
    """Predicts the per-target training mean."""

    def __init__(self, seed=None):
        self.means_ = None

    def fit(self, X, Y):
        Y = as_targets(Y)
        if Y.shape[0] == 0:
            raise EmptyDataError("Cannot fit on zero rows")
        self.means_ = Y.mean(axis=0)
        return self

    def predict(self, X):
        return np.tile(self.means_, (len(X), 1))

    def to_payload(self):
        return {"kind": self.kind, "means": self.means_.tolist()}

    @classmethod
    def from_payload(cls, payload):
        model = cls()
        model.means_ = np.asarray(payload["means"], dtype=float)
        return model


def derive_seed(*parts):
    """Stable 63-bit seed from any sequence of printable parts."""
    digest = hashlib.blake2b(":".join(str(part) for part in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@register_estimator("multi_output")
class MultiOutputRegressor(Regressor):
    """
    One independent single-target clone per target column.

    Every clone gets the same hyperparameters and its own seed derived from the wrapper seed
    and the target position.
    """

    def __init__(self, factory: Optional[Callable[[int], Regressor]] = None, seed=0):
        self.factory = factory
        self.seed = seed
        self.estimators_ = []

    @staticmethod
    def target_seed(seed, index):
        return derive_seed(seed, "target", index)

    def fit(self, X, Y):
        Y = as_targets(Y)
        self.estimators_ = []
        for j in range(Y.shape[1]):
            estimator = self.factory(self.target_seed(self.seed, j))
            estimator.fit(X, Y[:, j])
            self.estimators_.append(estimator)
        return self

    def predict(self, X):
        if not self.estimators_:
            raise TargetCountMismatchError("Multi-output model has no fitted targets")
        return np.column_stack([estimator.predict(X).reshape(len(X), -1)[:, 0] for estimator in self.estimators_])

    def to_payload(self):
        return {"kind": self.kind, "seed": self.seed, "estimators": [e.to_payload() for e in self.estimators_]}

    @classmethod
    def from_payload(cls, payload):
        model = cls(seed=payload["seed"])
        model.estimators_ = [load_estimator(item) for item in payload["estimators"]]
        return model


def multi_output_fit(factory, X, Y, seed=0):
    return MultiOutputRegressor(factory, seed).fit(X, Y)


def multi_output_predict(model, X):
    return model.predict(X)


@register_estimator("standardized")
class StandardizedRegressor(Regressor):
    """Z-scores features (and optionally targets) with statistics of the rows it is fitted on."""

    def __init__(self, base: Optional[Regressor] = None, scale_targets=False):
        self.base = base
        self.scale_targets = scale_targets
        self.x_scaler_ = None
        self.y_scaler_ = None

    def fit(self, X, Y):
        Y = as_targets(Y)
        self.x_scaler_ = Standardizer.fit(X)
        if self.scale_targets:
            self.y_scaler_ = Standardizer.fit(Y)
            Y = self.y_scaler_.transform(Y)
        self.base.fit(self.x_scaler_.transform(X), Y)
        return self

    def predict(self, X):
        predictions = self.base.predict(self.x_scaler_.transform(X))
        if self.y_scaler_ is not None:
            predictions = self.y_scaler_.inverse_transform(predictions)
        return predictions

    def to_payload(self):
        return {
            "kind": self.kind,
            "scale_targets": self.scale_targets,
            "x_scaler": self.x_scaler_.to_dict(),
            "y_scaler": self.y_scaler_.to_dict() if self.y_scaler_ is not None else None,
            "base": self.base.to_payload(),
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(load_estimator(payload["base"]), payload["scale_targets"])
        model.x_scaler_ = Standardizer.from_dict(payload["x_scaler"])
        if payload["y_scaler"] is not None:
            model.y_scaler_ = Standardizer.from_dict(payload["y_scaler"])
        return model


@dataclass(frozen=True)
class ModelFamily:
    name: str
    input_kind: str
    native_multi_output: bool
    default_grid: Dict[str, List[Any]]
    build: Callable[[Dict[str, Any], int], Regressor]


@dataclass(frozen=True)
class HyperGrid:
    params: Dict[str, List[Any]] = field(default_factory=dict)

    def configs(self):
        """Cartesian product ordered by parameter name, then by value position."""
        names = sorted(self.params)
        for name in names:
            if not self.params[name]:
                raise EmptyGridError(f"Grid parameter {name!r} has no values")
        return [dict(zip(names, values)) for values in itertools.product(*(self.params[name] for name in names))]

    def __len__(self):
        return math.prod(len(values) for values in self.params.values())


@dataclass(frozen=True)
class CvScheme:
    k: int = 5

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParameterError(f"Cross-validation needs k >= 2, got {self.k}")


@dataclass(frozen=True)
class SeedPlan:
    base_seed: int = 42

    def run_seed(self, family, grid_index, fold_index):
        return derive_seed(self.base_seed, family, grid_index, fold_index)


def config_json(config):
    return json.dumps(config, sort_keys=True)


def time_series_folds(n, k):
    """Expanding-window folds: equal test blocks of floor(n/(k+1)) rows, training on everything before."""
    if k < 2 or n < 2 * (k + 1):
        raise TooFewSamplesError(f"{n} samples cannot form {k} time-series folds")
    test_size = n // (k + 1)
    folds = []
    for i in range(1, k + 1):
        test_start = n - (k - i + 1) * test_size
        folds.append((range(0, test_start), range(test_start, test_start + test_size)))
    return folds


@dataclass(frozen=True)
class ScoreRow:
    family: str
    config_index: int
    config: Dict[str, Any]
    fold: int
    rmse_avg: float
    error: str = ""


@dataclass
class GridSearchResult:
    family: str
    best_index: int
    best_config: Dict[str, Any]
    best_score: float
    config_scores: List[float]
    table: List[ScoreRow]


def _score_cell(family, config, config_index, fold, X, Y, train_rows, test_rows, seed):
    try:
        model = family.build(config, seed)
        model.fit(X[train_rows.start : train_rows.stop], Y[train_rows.start : train_rows.stop])
        predictions = model.predict(X[test_rows.start : test_rows.stop])
        score = average_rmse(Y[test_rows.start : test_rows.stop], predictions)
        if not np.isfinite(score):
            raise FloatingPointError("non-finite validation RMSE")
        return ScoreRow(family.name, config_index, config, fold, score)
    except Exception as exc:
        return ScoreRow(family.name, config_index, config, fold, math.inf, f"{type(exc).__name__}: {exc}")


def grid_search(family: ModelFamily, grid: HyperGrid, X, Y, cv: CvScheme = CvScheme(), seeds: SeedPlan = SeedPlan(), n_jobs=1):
    configs = grid.configs()
    if not configs:
        raise EmptyGridError(f"Grid for {family.name} is empty")
    X = np.asarray(X, dtype=float)
    Y = as_targets(Y)
    folds = time_series_folds(len(X), cv.k)

    logger.info("Grid search %s: %s configs x %s folds", family.name, len(configs), len(folds))
    tasks = (
        delayed(_score_cell)(family, config, index, fold, X, Y, train_rows, test_rows, seeds.run_seed(family.name, index, fold))
        for index, config in enumerate(configs)
        for fold, (train_rows, test_rows) in enumerate(folds, start=1)
    )
    table = Parallel(n_jobs=n_jobs)(tasks)

    for row in table:
        if row.error:
            logger.warning("%s config %s fold %s failed: %s", family.name, row.config_index, row.fold, row.error)

    config_scores = []
    for index in range(len(configs)):
        scores = [row.rmse_avg for row in table if row.config_index == index]
        config_scores.append(math.inf if any(math.isinf(s) for s in scores) else float(np.mean(scores)))

    best_index = 0
    for index, score in enumerate(config_scores):
        if score < config_scores[best_index]:
            best_index = index
    if math.isinf(config_scores[best_index]):
        logger.error("Every %s grid cell failed; refitting the first config", family.name)
    logger.info("Best %s config %s with CV RMSE %.6g", family.name, config_json(configs[best_index]), config_scores[best_index])

    return GridSearchResult(
        family=family.name,
        best_index=best_index,
        best_config=configs[best_index],
        best_score=config_scores[best_index],
        config_scores=config_scores,
        table=table,
    )


@dataclass
class FinalFit:
    model: Regressor
    report: Any
    train_predictions: np.ndarray
    test_predictions: np.ndarray
    seed: int


def final_fit_and_evaluate(family: ModelFamily, config, train, test, target_names, seeds: SeedPlan = SeedPlan(), grid_index=0):
    """Refit the chosen config on the whole training split and score both splits; train/test are (X, Y) pairs."""
    (X_train, Y_train), (X_test, Y_test) = train, test
    seed = seeds.run_seed(family.name, grid_index, "final")
    model = family.build(config, seed)
    model.fit(X_train, Y_train)
    train_predictions = model.predict(X_train)
    test_predictions = model.predict(X_test)
    report = build_report(family.name, target_names, Y_train, train_predictions, Y_test, test_predictions)
    return FinalFit(model, report, train_predictions, test_predictions, seed)
