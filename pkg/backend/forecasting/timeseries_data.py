"""
Ingestion and repair of hourly weather observations.

Raw rows are parsed into a chronologically ordered series, gaps are repaired with
forward then backward filling, physically impossible values are flagged and
re-filled, and data is split chronologically into train and test parts.
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from functools import singledispatch
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .exceptions import (
    AllMissingColumnError,
    DatasetNotFoundError,
    EmptyDatasetError,
    InvalidParameterError,
    InvalidRatioError,
    MalformedTimestampError,
    MalformedValueError,
    MissingColumnError,
    TooFewSamplesError,
)

logger = logging.getLogger(__name__)

TIMESTAMP_COLUMN = "datetime"
VARIABLES = (
    "temp",
    "humidity",
    "precip",
    "windspeed",
    "sealevelpressure",
    "cloudcover",
    "solarradiation",
)
INPUT_COLUMNS = (TIMESTAMP_COLUMN,) + VARIABLES
HOUR = pd.Timedelta(hours=1)

DEFAULT_LIMITS = {
    "temp": (-30.0, 55.0),
    "humidity": (0.0, 100.0),
    "precip": (0.0, math.inf),
    "windspeed": (0.0, math.inf),
    "sealevelpressure": (850.0, 1100.0),
    "cloudcover": (0.0, 100.0),
    "solarradiation": (0.0, math.inf),
}


@dataclass(frozen=True)
class ObservationRecord:
    timestamp: datetime
    temp: Optional[float] = None
    humidity: Optional[float] = None
    precip: Optional[float] = None
    windspeed: Optional[float] = None
    sealevelpressure: Optional[float] = None
    cloudcover: Optional[float] = None
    solarradiation: Optional[float] = None


@dataclass(frozen=True)
class PhysicalBounds:
    """Closed (lower, upper) interval per variable; values outside are treated as sensor faults."""

    limits: Mapping[str, tuple] = field(default_factory=lambda: dict(DEFAULT_LIMITS))

    def __post_init__(self):
        for variable, (lower, upper) in self.limits.items():
            if not lower < upper:
                raise InvalidParameterError(f"Bounds for {variable!r} must satisfy lower < upper, got ({lower}, {upper})")

    def with_overrides(self, overrides):
        merged = dict(self.limits)
        for variable, (lower, upper) in overrides.items():
            if variable not in VARIABLES:
                raise InvalidParameterError(f"Unknown variable {variable!r} in bounds; expected one of {', '.join(VARIABLES)}")
            merged[variable] = (float(lower), float(upper))
        return PhysicalBounds(merged)

    def to_dict(self):
        return {variable: [lower, upper] for variable, (lower, upper) in self.limits.items()}

    @classmethod
    def from_dict(cls, data):
        return cls({variable: (float(lower), float(upper)) for variable, (lower, upper) in data.items()})


@dataclass(frozen=True)
class ObservationSeries:
    """
    Hourly observations indexed by strictly increasing timestamps.

    The frame is never mutated in place; every operation returns a new series.
    """

    frame: pd.DataFrame
    frequency: pd.Timedelta = HOUR

    def __len__(self):
        return len(self.frame)

    def __getitem__(self, key):
        return ObservationSeries(self.frame.iloc[key], self.frequency)

    @property
    def timestamps(self):
        return self.frame.index

    def column(self, name):
        return self.frame[name].to_numpy(dtype=float)

    @property
    def records(self):
        return [
            ObservationRecord(
                timestamp=timestamp.to_pydatetime(),
                **{name: (None if pd.isna(value) else float(value)) for name, value in row.items()},
            )
            for timestamp, row in self.frame.iterrows()
        ]


def read_observations(path):
    """Read the raw CSV as a list of field-string maps; empty cells stay empty strings."""
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(f"Dataset not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    logger.info("Read %s rows from %s", len(frame), path)
    return frame.to_dict("records")


def parse_and_sort(raw_rows: Sequence[Mapping[str, str]]) -> ObservationSeries:
    if not raw_rows:
        raise EmptyDatasetError("Dataset contains no rows")

    columns = set(raw_rows[0].keys())
    missing = [name for name in INPUT_COLUMNS if name not in columns]
    if missing:
        raise MissingColumnError(f"Dataset is missing required columns: {', '.join(missing)}")
    extra = sorted(columns.difference(INPUT_COLUMNS))
    if extra:
        logger.warning("Ignoring extra columns: %s", ", ".join(extra))

    raw_times = [str(row.get(TIMESTAMP_COLUMN, "")).strip() for row in raw_rows]
    timestamps = pd.to_datetime(pd.Series(raw_times), errors="coerce", format="ISO8601")
    bad = np.flatnonzero(timestamps.isna().to_numpy())
    if bad.size:
        raise MalformedTimestampError(int(bad[0]), raw_times[bad[0]])

    data = {}
    for name in VARIABLES:
        cells = pd.Series([str(row.get(name, "")).strip() for row in raw_rows])
        values = pd.to_numeric(cells.where(cells != ""), errors="coerce")
        present = (cells != "").to_numpy()
        malformed = np.flatnonzero(present & ~np.isfinite(values.to_numpy(dtype=float)))
        if malformed.size:
            raise MalformedValueError(int(malformed[0]), name, cells.iloc[malformed[0]])
        data[name] = values.to_numpy(dtype=float)

    frame = pd.DataFrame(data, index=pd.DatetimeIndex(timestamps, name="timestamp"))
    frame = frame.sort_index(kind="mergesort")
    duplicated = frame.index.duplicated(keep="first")
    if duplicated.any():
        logger.warning("Dropping %s rows with duplicate timestamps (keeping first occurrence)", int(duplicated.sum()))
        frame = frame[~duplicated]

    _warn_on_hour_gaps(frame.index)
    return ObservationSeries(frame)


def _warn_on_hour_gaps(index):
    if len(index) < 2:
        return
    steps = np.diff(index.asi8)
    irregular = int(np.count_nonzero(steps != HOUR.value))
    if irregular:
        logger.warning("%s consecutive timestamp pairs are not one hour apart; gaps are not synthesized", irregular)


def fill_missing(series: ObservationSeries) -> ObservationSeries:
    frame = series.frame
    for name in frame.columns:
        if frame[name].isna().all():
            raise AllMissingColumnError(name)
    return ObservationSeries(frame.ffill().bfill(), series.frequency)


def remove_outliers(series: ObservationSeries, bounds: PhysicalBounds):
    """Mark out-of-bounds cells missing and re-fill them; returns the repaired series and the flagged count."""
    frame = series.frame
    flags = pd.DataFrame(False, index=frame.index, columns=frame.columns)
    for name, (lower, upper) in bounds.limits.items():
        if name in frame.columns:
            column = frame[name]
            flags[name] = (column < lower) | (column > upper)

    per_column = flags.sum()
    flagged = int(per_column.sum())
    for name, count in per_column.items():
        if count:
            logger.info("Flagged %s out-of-bounds values in %s", int(count), name)

    return fill_missing(ObservationSeries(frame.mask(flags), series.frequency)), flagged


def prepare_series(raw_rows, bounds=None):
    """Full repair pipeline: parse, sort, fill, and drop physically impossible values."""
    bounds = bounds or PhysicalBounds()
    series = parse_and_sort(raw_rows)
    missing = int(series.frame.isna().sum().sum())
    series = fill_missing(series)
    series, flagged = remove_outliers(series, bounds)
    logger.info("Prepared %s hourly rows (%s missing cells filled, %s outliers repaired)", len(series), missing, flagged)
    return series, missing + flagged


def load_series(path, bounds=None):
    return prepare_series(read_observations(path), bounds)


def split_index(n, ratio):
    if not 0.0 < ratio < 1.0:
        raise InvalidRatioError(f"Split ratio must lie strictly between 0 and 1, got {ratio}")
    cut = math.floor(ratio * n)
    if cut == 0 or cut == n:
        raise TooFewSamplesError(f"Split ratio {ratio} on {n} rows leaves an empty part")
    return cut


@singledispatch
def chronological_split(data, ratio):
    """Split any time-ordered sliceable container into its first floor(ratio*n) rows and the remainder."""
    cut = split_index(len(data), ratio)
    return data[:cut], data[cut:]


@chronological_split.register
def _(data: pd.DataFrame, ratio):
    cut = split_index(len(data), ratio)
    return data.iloc[:cut], data.iloc[cut:]
