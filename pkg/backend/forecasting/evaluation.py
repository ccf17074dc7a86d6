"""
Regression metrics per target, their two-target average and the train/test report.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Tuple

import numpy as np

from .exceptions import EmptyInputError, InsufficientHistoryError, LengthMismatchError

logger = logging.getLogger(__name__)

METRIC_NAMES = ("mae", "rmse", "r2", "mape")
AVERAGE = "avg"
SPLITS = ("train", "test")


@dataclass(frozen=True)
class MetricConfig:
    eps: float = float(np.finfo(np.float64).eps)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("MAPE eps must be positive")


@dataclass(frozen=True)
class MetricSet:
    mae: float
    rmse: float
    r2: float
    mape: float
    degenerate_r2: bool = False

    def as_row(self):
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise LengthMismatchError(f"Got {y.size} actual values and {y_hat.size} predictions")
    if y.size == 0:
        raise EmptyInputError("Metrics need at least one value")
    return y, y_hat


def mae(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def r2_with_flag(y, y_hat):
    """R² and whether the constant-target rule was applied."""
    y, y_hat = _pair(y, y_hat)
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return (1.0 if ss_res == 0.0 else 0.0), True
    return 1.0 - ss_res / ss_tot, False


def r2(y, y_hat):
    return r2_with_flag(y, y_hat)[0]


def mape(y, y_hat, cfg: MetricConfig = MetricConfig()):
    y, y_hat = _pair(y, y_hat)
    return float(100.0 * np.mean(np.abs(y - y_hat) / np.maximum(np.abs(y), cfg.eps)))


def metric_set(y, y_hat, cfg: MetricConfig = MetricConfig()):
    score, degenerate = r2_with_flag(y, y_hat)
    if degenerate:
        logger.warning("R² evaluated on a constant target; reporting %s", score)
    return MetricSet(mae(y, y_hat), rmse(y, y_hat), score, mape(y, y_hat, cfg), degenerate)


def average_two_targets(temp: MetricSet, humidity: MetricSet) -> MetricSet:
    return MetricSet(
        mae=(temp.mae + humidity.mae) / 2.0,
        rmse=(temp.rmse + humidity.rmse) / 2.0,
        r2=(temp.r2 + humidity.r2) / 2.0,
        mape=(temp.mape + humidity.mape) / 2.0,
        degenerate_r2=temp.degenerate_r2 or humidity.degenerate_r2,
    )


def average_metric_sets(sets):
    """Component-wise mean of any number of metric sets (two targets in practice)."""
    sets = list(sets)
    if len(sets) == 2:
        return average_two_targets(*sets)
    return MetricSet(
        **{name: float(np.mean([getattr(s, name) for s in sets])) for name in METRIC_NAMES},
        degenerate_r2=any(s.degenerate_r2 for s in sets),
    )


def per_target_metrics(Y, Y_hat, target_names, cfg: MetricConfig = MetricConfig()):
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    Y_hat = np.asarray(Y_hat, dtype=float).reshape(len(Y_hat), -1)
    if Y.shape != Y_hat.shape:
        raise LengthMismatchError(f"Actual shape {Y.shape} differs from prediction shape {Y_hat.shape}")
    return {name: metric_set(Y[:, j], Y_hat[:, j], cfg) for j, name in enumerate(target_names)}


def average_rmse(Y, Y_hat):
    """Selection score used by grid search: RMSE averaged over target columns."""
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    Y_hat = np.asarray(Y_hat, dtype=float).reshape(len(Y_hat), -1)
    return float(np.mean([rmse(Y[:, j], Y_hat[:, j]) for j in range(Y.shape[1])]))


@dataclass
class EvalReport:
    model: str
    target_names: Tuple[str, ...]
    train: Dict[str, MetricSet] = field(default_factory=dict)
    test: Dict[str, MetricSet] = field(default_factory=dict)

    @property
    def averages(self):
        return {split: average_metric_sets(getattr(self, split).values()) for split in SPLITS}

    def rows(self):
        """Flat report rows: one per (split, target) plus an averaged row per split."""
        rows = []
        averages = self.averages
        for split in SPLITS:
            metrics = getattr(self, split)
            for target in self.target_names:
                rows.append({"model": self.model, "split": split, "target": target, **metrics[target].as_row()})
            rows.append({"model": self.model, "split": split, "target": AVERAGE, **averages[split].as_row()})
        return rows

    def to_dict(self):
        return {
            "model": self.model,
            "target_names": list(self.target_names),
            "train": {name: asdict(m) for name, m in self.train.items()},
            "test": {name: asdict(m) for name, m in self.test.items()},
        }


def build_report(model, target_names, Y_train, P_train, Y_test, P_test, cfg: MetricConfig = MetricConfig()):
    return EvalReport(
        model=model,
        target_names=tuple(target_names),
        train=per_target_metrics(Y_train, P_train, target_names, cfg),
        test=per_target_metrics(Y_test, P_test, target_names, cfg),
    )


def seasonal_naive(values, rows, period=24):
    """ŷ_t = y_{t-period} for the given row positions of a full-length series."""
    values = np.asarray(values, dtype=float)
    rows = np.asarray(rows, dtype=int)
    if rows.size and rows.min() < period:
        raise InsufficientHistoryError(f"Seasonal-naive forecast needs {period} hours of history before every row")
    return values[rows - period]
