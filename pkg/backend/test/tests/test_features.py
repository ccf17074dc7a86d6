import numpy as np
import pytest

from forecasting.exceptions import (
    EmptyInputError,
    EmptyMatrixError,
    InsufficientHistoryError,
    LagOutOfRangeError,
    NonPositiveLagError,
    TooFewRowsError,
    WindowTooSmallError,
)
from forecasting.features import (
    FeatureSpec,
    Standardizer,
    assemble_matrix,
    build_feature_frame,
    fit_standardizer,
    histogram,
    make_lag_features,
    make_rolling_features,
    pearson_correlation,
)
from forecasting.timeseries_data import ObservationSeries


def with_values(series, column, start, values):
    frame = series.frame.copy()
    frame.iloc[start:, frame.columns.get_loc(column)] = values
    return ObservationSeries(frame)


def test_lag_column_shifts_target(series_of):
    lagged = make_lag_features(series_of([1, 2, 3, 4]), "temp", [2])["lag_2_temp"]

    assert np.isnan(lagged.iloc[0]) and np.isnan(lagged.iloc[1])
    assert list(lagged.iloc[2:]) == [1.0, 2.0]


def test_lag_of_constant_series_is_constant(series_of):
    lagged = make_lag_features(series_of([5.5] * 10), "temp", [3])["lag_3_temp"].dropna()

    assert (lagged == 5.5).all()


def test_lag_must_be_positive_and_shorter_than_series(series_of):
    series = series_of([1, 2, 3])

    with pytest.raises(NonPositiveLagError):
        make_lag_features(series, "temp", [0])
    with pytest.raises(LagOutOfRangeError):
        make_lag_features(series, "temp", [3])


def test_rolling_window_ends_before_current_hour(series_of):
    rolled = make_rolling_features(series_of([1, 2, 3, 100]), "temp", [3])

    assert rolled["rollmean_3_temp"].iloc[3] == pytest.approx(2.0, abs=1e-12)
    assert rolled["rollstd_3_temp"].iloc[3] == pytest.approx(1.0, abs=1e-12)
    assert rolled.iloc[:3].isna().all().all()


def test_rolling_of_constant_series_has_zero_spread(series_of):
    rolled = make_rolling_features(series_of([4.0] * 12), "temp", [6]).dropna()

    np.testing.assert_allclose(rolled["rollmean_6_temp"], 4.0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(rolled["rollstd_6_temp"], 0.0, rtol=0, atol=1e-12)


def test_rolling_window_must_cover_two_hours(series_of):
    with pytest.raises(WindowTooSmallError):
        make_rolling_features(series_of([1, 2, 3]), "temp", [1])


def test_default_matrix_shape(synthetic_series):
    matrix = assemble_matrix(synthetic_series[:100], FeatureSpec())

    assert matrix.X.shape == (75, 31)
    assert matrix.Y.shape == (75, 2)
    assert matrix.row_timestamps[0] == synthetic_series.timestamps[25]
    assert not np.isnan(matrix.X).any()


def test_matrix_needs_one_complete_row(synthetic_series):
    with pytest.raises(InsufficientHistoryError):
        assemble_matrix(synthetic_series[:25], FeatureSpec())


def test_small_spec_row_count(series_of):
    spec = FeatureSpec(targets=("temp",), lag_hours=(2,), roll_windows=(3,), covariates=())

    matrix = assemble_matrix(series_of(list(range(10))), spec)

    assert matrix.X.shape == (6, 3)
    assert matrix.feature_names == ("lag_2_temp", "rollmean_3_temp", "rollstd_3_temp")
    np.testing.assert_array_equal(matrix.Y[:, 0], np.arange(4, 10))


def test_feature_names_follow_spec_content_only():
    first = FeatureSpec(lag_hours=(24, 2, 3, 2), roll_windows=(6, 3))
    second = FeatureSpec(lag_hours=(2, 3, 24), roll_windows=(3, 6))

    assert first.feature_names == second.feature_names
    assert first.feature_names[:5] == ("precip", "windspeed", "sealevelpressure", "cloudcover", "solarradiation")
    assert first.feature_names[5:8] == ("lag_2_temp", "lag_3_temp", "lag_24_temp")


def test_spec_validation():
    with pytest.raises(NonPositiveLagError):
        FeatureSpec(lag_hours=(0, 2))
    with pytest.raises(WindowTooSmallError):
        FeatureSpec(roll_windows=(1,))


def test_spec_dict_round_trip():
    spec = FeatureSpec(lag_hours=(1, 5), covariates=("precip",))

    assert FeatureSpec.from_dict(spec.to_dict()) == spec


def test_future_observations_do_not_change_features(synthetic_series):
    spec = FeatureSpec()
    original = build_feature_frame(synthetic_series, spec)
    t = 200
    mutated = synthetic_series
    for column in ("temp", "humidity", "precip", "sealevelpressure"):
        mutated = with_values(mutated, column, t + 1, 1000.0)

    changed = build_feature_frame(mutated, spec)

    np.testing.assert_array_equal(changed.iloc[: t + 1].to_numpy(), original.iloc[: t + 1].to_numpy())


def test_current_target_does_not_leak_into_its_own_features(synthetic_series):
    spec = FeatureSpec()
    t = 150
    frame = synthetic_series.frame.copy()
    frame.iloc[t, frame.columns.get_loc("temp")] += 50.0

    original = build_feature_frame(synthetic_series, spec).iloc[t]
    changed = build_feature_frame(ObservationSeries(frame), spec).iloc[t]

    np.testing.assert_array_equal(changed.to_numpy(), original.to_numpy())


def test_standardizer_two_point_column():
    scaler = fit_standardizer(np.array([[0.0], [10.0]]))

    assert scaler.mean[0] == 5.0
    assert scaler.scale[0] == 5.0
    np.testing.assert_array_equal(scaler.transform(np.array([[0.0], [10.0]]))[:, 0], [-1.0, 1.0])


def test_standardizer_passes_constant_column_through():
    X = np.array([[3.0, 1.0], [3.0, 2.0], [3.0, 4.0]])

    Z = Standardizer.fit(X).transform(X)

    np.testing.assert_array_equal(Z[:, 0], X[:, 0])


def test_standardizer_centers_training_rows_and_inverts():
    rng = np.random.default_rng(3)
    X = rng.normal(1000.0, 8.0, size=(50, 4))
    scaler = Standardizer.fit(X)

    Z = scaler.transform(X)

    assert np.abs(Z.mean(axis=0)).max() < 1e-10
    np.testing.assert_allclose(scaler.inverse_transform(Z), X, rtol=0, atol=1e-9)
    restored = Standardizer.from_dict(scaler.to_dict())
    np.testing.assert_array_equal(restored.transform(X), Z)


def test_standardizer_rejects_empty_matrix():
    with pytest.raises(EmptyMatrixError):
        Standardizer.fit(np.empty((0, 3)))


def test_correlation_of_linear_relations():
    x = np.arange(10, dtype=float)
    corr = pearson_correlation(np.column_stack([x, 2 * x + 3, -x]), ["x", "y", "z"])

    assert corr.values[0, 1] == pytest.approx(1.0)
    assert corr.values[0, 2] == pytest.approx(-1.0)
    assert np.abs(corr.values - corr.values.T).max() < 1e-12
    np.testing.assert_array_equal(np.diag(corr.values), 1.0)


def test_correlation_flags_constant_columns():
    corr = pearson_correlation(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]), ["a", "b"])

    assert corr.degenerate == ("b",)
    assert corr.values[0, 1] == 0.0
    assert corr.values[1, 1] == 1.0


def test_correlation_needs_two_rows():
    with pytest.raises(TooFewRowsError):
        pearson_correlation(np.array([[1.0, 2.0]]))


def test_temperature_and_pressure_move_in_opposite_directions(synthetic_series):
    frame = synthetic_series.frame
    corr = pearson_correlation(frame[["temp", "sealevelpressure"]].to_numpy(), ["temp", "sealevelpressure"])

    assert corr.values[0, 1] < 0
    assert np.all(np.abs(corr.values) <= 1.0)


def test_histogram_equal_width_bins():
    edges, counts = histogram([0, 1, 2, 3], 2)

    np.testing.assert_array_equal(edges, [0.0, 1.5, 3.0])
    np.testing.assert_array_equal(counts, [2, 2])


def test_histogram_of_equal_values_uses_unit_width():
    edges, counts = histogram([7.0] * 5, 4)

    assert edges[0] == 7.0 and edges[-1] == 8.0
    assert counts.sum() == 5
    assert np.count_nonzero(counts) == 1


def test_histogram_rejects_empty_input():
    with pytest.raises(EmptyInputError):
        histogram([], 3)


def test_humidity_piled_near_saturation_peaks_in_top_bin():
    rng = np.random.default_rng(5)
    humidity = np.clip(100.0 - rng.exponential(8.0, size=2000), 0.0, 100.0)

    _, counts = histogram(humidity, 10)

    assert counts.argmax() == len(counts) - 1
