import math

import numpy as np
import pandas as pd
import pytest

from forecasting.exceptions import (
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
from forecasting.timeseries_data import (
    PhysicalBounds,
    chronological_split,
    fill_missing,
    load_series,
    parse_and_sort,
    prepare_series,
    read_observations,
    remove_outliers,
)


def test_parse_sorts_rows_chronologically(row_factory):
    rows = [row_factory(1, temp=2), row_factory(0, temp=1), row_factory(2, temp=3)]

    series = parse_and_sort(rows)

    assert list(series.column("temp")) == [1.0, 2.0, 3.0]
    assert series.timestamps.is_monotonic_increasing
    assert series.timestamps.is_unique


def test_parse_keeps_first_of_duplicate_timestamps(row_factory):
    rows = [row_factory(0, temp=1), row_factory(1, temp=2), row_factory(0, temp=9)]

    series = parse_and_sort(rows)

    assert len(series) == 2
    assert series.column("temp")[0] == 1.0


def test_parse_rejects_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        parse_and_sort([])


def test_parse_reports_malformed_timestamp_row(row_factory):
    rows = [row_factory(0), {**row_factory(1), "datetime": "yesterday-ish"}]

    with pytest.raises(MalformedTimestampError) as excinfo:
        parse_and_sort(rows)

    assert excinfo.value.row_index == 1


def test_parse_rejects_malformed_number(row_factory):
    with pytest.raises(MalformedValueError):
        parse_and_sort([row_factory(0, humidity="wet")])


@pytest.mark.parametrize("cell", ["inf", "-inf", "Infinity", "NaN"])
def test_parse_rejects_non_finite_numbers(row_factory, cell):
    rows = [row_factory(hour) for hour in range(40)]
    rows[30]["precip"] = cell

    with pytest.raises(MalformedValueError) as excinfo:
        prepare_series(rows)

    assert excinfo.value.row_index == 30
    assert excinfo.value.column == "precip"


def test_parse_requires_schema_columns(row_factory):
    row = row_factory(0)
    del row["cloudcover"]

    with pytest.raises(MissingColumnError):
        parse_and_sort([row])


def test_parse_ignores_extra_columns_and_marks_empty_cells_missing(row_factory):
    rows = [{**row_factory(0, temp=""), "station": "A"}, row_factory(1)]

    series = parse_and_sort(rows)

    assert "station" not in series.frame.columns
    assert math.isnan(series.column("temp")[0])


def test_records_expose_missing_fields_as_none(row_factory):
    series = parse_and_sort([row_factory(0, precip="")])

    record = series.records[0]

    assert record.precip is None
    assert record.temp == 20.0


def test_fill_missing_forward_then_backward(row_factory):
    forward = parse_and_sort([row_factory(0, temp=1.0), row_factory(1, temp=""), row_factory(2, temp=3.0)])
    backward = parse_and_sort([row_factory(0, temp=""), row_factory(1, temp=2.0)])

    assert list(fill_missing(forward).column("temp")) == [1.0, 1.0, 3.0]
    assert list(fill_missing(backward).column("temp")) == [2.0, 2.0]


def test_fill_missing_is_idempotent(row_factory):
    series = parse_and_sort([row_factory(0, humidity=""), row_factory(1, humidity=55), row_factory(2, humidity="")])

    once = fill_missing(series)

    pd.testing.assert_frame_equal(fill_missing(once).frame, once.frame)
    assert not once.frame.isna().any().any()


def test_fill_missing_rejects_column_without_observations(row_factory):
    series = parse_and_sort([row_factory(0, temp=""), row_factory(1, temp="")])

    with pytest.raises(AllMissingColumnError):
        fill_missing(series)


def test_remove_outliers_refills_impossible_values(row_factory):
    rows = [row_factory(0, humidity=50), row_factory(1, humidity=-5), row_factory(2, temp=999, humidity=70)]
    series = fill_missing(parse_and_sort(rows))

    cleaned, flagged = remove_outliers(series, PhysicalBounds())

    assert flagged == 2
    assert list(cleaned.column("humidity")) == [50.0, 50.0, 70.0]
    assert cleaned.column("temp")[2] == 20.0


def test_remove_outliers_leaves_valid_series_untouched(synthetic_series):
    cleaned, flagged = remove_outliers(synthetic_series, PhysicalBounds())

    assert flagged == 0
    pd.testing.assert_frame_equal(cleaned.frame, synthetic_series.frame)


def test_bounds_must_be_ordered():
    with pytest.raises(InvalidParameterError):
        PhysicalBounds().with_overrides({"temp": (10.0, -10.0)})


def test_bound_overrides_change_what_is_flagged(row_factory):
    series = fill_missing(parse_and_sort([row_factory(0, temp=20), row_factory(1, temp=45)]))

    _, flagged = remove_outliers(series, PhysicalBounds().with_overrides({"temp": (-10.0, 40.0)}))

    assert flagged == 1


def test_prepare_series_counts_repaired_cells(row_factory):
    rows = [row_factory(0), row_factory(1, precip=""), row_factory(2, humidity=140)]

    series, repaired = prepare_series(rows)

    assert repaired == 2
    assert not series.frame.isna().any().any()
    assert series.frame["humidity"].between(0, 100).all()


def test_read_observations_names_missing_path(tmp_path):
    missing = tmp_path / "nowhere.csv"

    with pytest.raises(DatasetNotFoundError, match="nowhere.csv"):
        read_observations(missing)


def test_load_series_from_csv(dataset_csv):
    series, _ = load_series(dataset_csv)

    assert len(series) == 2000
    assert (np.diff(series.timestamps.asi8) > 0).all()


@pytest.mark.parametrize("n,ratio,expected", [(100, 0.8, (80, 20)), (10, 0.8, (8, 2)), (7, 0.5, (3, 4))])
def test_chronological_split_sizes(n, ratio, expected):
    train, test = chronological_split(list(range(n)), ratio)

    assert (len(train), len(test)) == expected
    assert train + test == list(range(n))


def test_chronological_split_of_frames_preserves_order(synthetic_series):
    train, test = chronological_split(synthetic_series.frame, 0.8)

    assert train.index.max() < test.index.min()
    pd.testing.assert_frame_equal(pd.concat([train, test]), synthetic_series.frame)


@pytest.mark.parametrize("ratio", [0.0, 1.0, 1.5, -0.2])
def test_chronological_split_rejects_bad_ratio(ratio):
    with pytest.raises(InvalidRatioError):
        chronological_split(list(range(10)), ratio)


def test_chronological_split_rejects_empty_part():
    with pytest.raises(TooFewSamplesError):
        chronological_split([1], 0.5)
