"""
Composite feature system: same-hour covariates, target lags and trailing rolling
statistics, plus z-score standardization and exploratory statistics.

Lag and rolling columns at hour t only use observations up to t-1.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import pandas as pd

from .exceptions import (
    EmptyInputError,
    EmptyMatrixError,
    InsufficientHistoryError,
    InvalidParameterError,
    LagOutOfRangeError,
    NonPositiveLagError,
    TooFewRowsError,
    WindowTooSmallError,
)
from .timeseries_data import VARIABLES

logger = logging.getLogger(__name__)

TARGETS = ("temp", "humidity")
DEFAULT_LAGS = (2, 3, 6, 12, 24)
DEFAULT_WINDOWS = (3, 6, 12, 24)
DEFAULT_COVARIATES = ("precip", "windspeed", "sealevelpressure", "cloudcover", "solarradiation")


@dataclass(frozen=True)
class FeatureSpec:
    targets: Tuple[str, ...] = TARGETS
    lag_hours: Tuple[int, ...] = DEFAULT_LAGS
    roll_windows: Tuple[int, ...] = DEFAULT_WINDOWS
    covariates: Tuple[str, ...] = DEFAULT_COVARIATES

    def __post_init__(self):
        # Ordered sets: deduplicated and sorted ascending, so column order never depends on input order.
        object.__setattr__(self, "lag_hours", tuple(sorted(set(self.lag_hours))))
        object.__setattr__(self, "roll_windows", tuple(sorted(set(self.roll_windows))))
        object.__setattr__(self, "targets", tuple(dict.fromkeys(self.targets)))
        object.__setattr__(self, "covariates", tuple(dict.fromkeys(self.covariates)))

        if not self.targets or not self.lag_hours or not self.roll_windows:
            raise InvalidParameterError("Feature spec needs at least one target, lag and rolling window")
        if min(self.lag_hours) < 1:
            raise NonPositiveLagError(f"Lags must be >= 1, got {self.lag_hours}")
        if min(self.roll_windows) < 2:
            raise WindowTooSmallError(f"Rolling windows must be >= 2, got {self.roll_windows}")
        unknown = [name for name in self.targets + self.covariates if name not in VARIABLES]
        if unknown:
            raise InvalidParameterError(f"Unknown variables in feature spec: {', '.join(unknown)}")

    @property
    def first_complete_row(self):
        return max(max(self.lag_hours), max(self.roll_windows) + 1)

    @property
    def feature_names(self):
        names = list(self.covariates)
        names += [f"lag_{k}_{target}" for target in self.targets for k in self.lag_hours]
        for target in self.targets:
            for w in self.roll_windows:
                names += [f"rollmean_{w}_{target}", f"rollstd_{w}_{target}"]
        return tuple(names)

    def to_dict(self):
        return {
            "targets": list(self.targets),
            "lag_hours": list(self.lag_hours),
            "roll_windows": list(self.roll_windows),
            "covariates": list(self.covariates),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**{key: tuple(value) for key, value in data.items()})


@dataclass(frozen=True)
class FeatureMatrix:
    row_timestamps: pd.DatetimeIndex
    feature_names: Tuple[str, ...]
    target_names: Tuple[str, ...]
    X: np.ndarray
    Y: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, key):
        return FeatureMatrix(self.row_timestamps[key], self.feature_names, self.target_names, self.X[key], self.Y[key])


def make_lag_features(series, target, lag_hours):
    values = series.frame[target]
    columns = {}
    for k in lag_hours:
        if k < 1:
            raise NonPositiveLagError(f"Lag must be >= 1, got {k}")
        if k >= len(values):
            raise LagOutOfRangeError(f"Lag {k} is not shorter than the series ({len(values)} rows)")
        columns[f"lag_{k}_{target}"] = values.shift(k)
    return pd.DataFrame(columns, index=values.index)


def make_rolling_features(series, target, roll_windows):
    # shift(1) makes every window end at t-1.
    past = series.frame[target].shift(1)
    columns = {}
    for w in roll_windows:
        if w < 2:
            raise WindowTooSmallError(f"Rolling window must be >= 2, got {w}")
        window = past.rolling(window=w, min_periods=w)
        columns[f"rollmean_{w}_{target}"] = window.mean()
        columns[f"rollstd_{w}_{target}"] = window.std(ddof=1)
    return pd.DataFrame(columns, index=past.index)


def build_feature_frame(series, spec: FeatureSpec):
    """All feature columns for every hour of the series, incomplete rows included."""
    parts = [series.frame[list(spec.covariates)]]
    parts += [make_lag_features(series, target, spec.lag_hours) for target in spec.targets]
    parts += [make_rolling_features(series, target, spec.roll_windows) for target in spec.targets]
    return pd.concat(parts, axis=1)[list(spec.feature_names)]


def assemble_matrix(series, spec: FeatureSpec = None) -> FeatureMatrix:
    spec = spec or FeatureSpec()
    start = spec.first_complete_row
    if len(series) <= start:
        raise InsufficientHistoryError(
            f"Series of {len(series)} rows leaves no complete feature row (first complete row is {start})"
        )

    frame = build_feature_frame(series, spec).iloc[start:]
    targets = series.frame[list(spec.targets)].iloc[start:]
    complete = frame.notna().all(axis=1) & targets.notna().all(axis=1)
    if not complete.all():
        logger.warning("Dropping %s rows with incomplete derived features", int((~complete).sum()))
        frame, targets = frame[complete], targets[complete]
    if frame.empty:
        raise InsufficientHistoryError("No complete feature row remains")

    return FeatureMatrix(
        row_timestamps=frame.index,
        feature_names=spec.feature_names,
        target_names=spec.targets,
        X=frame.to_numpy(dtype=float),
        Y=targets.to_numpy(dtype=float),
    )


@dataclass
class Standardizer:
    """Per-column z-scoring with training statistics; zero-variance columns pass through unchanged."""

    mean: np.ndarray = field(default=None)
    scale: np.ndarray = field(default=None)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyMatrixError("Cannot fit a standardizer on an empty matrix")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = scale == 0
        mean[constant] = 0.0
        scale[constant] = 1.0
        return cls(mean=mean, scale=scale)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(mean=np.asarray(data["mean"], dtype=float), scale=np.asarray(data["scale"], dtype=float))


def fit_standardizer(X):
    return Standardizer.fit(X)


@dataclass(frozen=True)
class CorrelationMatrix:
    names: Tuple[str, ...]
    values: np.ndarray
    degenerate: Tuple[str, ...] = ()


def pearson_correlation(columns, names=None):
    """Pearson r between every pair of columns; constant columns get r = 0 off the diagonal."""
    data = np.asarray(columns, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise TooFewRowsError("Pearson correlation needs at least 2 rows")
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(data.shape[1]))

    centered = data - data.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    constant = norms == 0
    safe = np.where(constant, 1.0, norms)
    unit = centered / safe
    r = np.clip(unit.T @ unit, -1.0, 1.0)
    r = (r + r.T) / 2.0
    r[constant, :] = 0.0
    r[:, constant] = 0.0
    np.fill_diagonal(r, 1.0)

    degenerate = tuple(name for name, flag in zip(names, constant) if flag)
    if degenerate:
        logger.warning("Constant columns in correlation input: %s", ", ".join(degenerate))
    return CorrelationMatrix(names=names, values=r, degenerate=degenerate)


def histogram(values, bin_count):
    """Equal-width bins over [min, max]; the last bin includes its right edge."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInputError("Histogram needs at least one value")
    if bin_count < 1:
        raise InvalidParameterError(f"bin_count must be >= 1, got {bin_count}")
    low, high = float(values.min()), float(values.max())
    if high == low:
        high = low + 1.0
    counts, edges = np.histogram(values, bins=bin_count, range=(low, high))
    return edges, counts
