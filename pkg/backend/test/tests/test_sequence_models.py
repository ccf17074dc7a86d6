import json

import numpy as np
import pandas as pd
import pytest

from forecasting.exceptions import (
    InvalidParameterError,
    KernelTooLargeError,
    SeriesTooShortError,
    ShapeMismatchError,
)
from forecasting.features import Standardizer
from forecasting.model_core import load_estimator
from forecasting.sequence_models import (
    CnnLstmParams,
    CnnLstmRegressor,
    LstmParams,
    LstmRegressor,
    SequenceBatch,
    SequenceNetwork,
    build_windows,
    conv1d_forward,
    lstm_forward,
    predict_sequence,
    train_sequence_model,
)
from forecasting.timeseries_data import VARIABLES, ObservationSeries


def numeric_gradient(network, X, Y, name, index, step=1e-5):
    original = network.params[name][index]
    network.params[name][index] = original + step
    plus, _ = network.loss_and_grads(X, Y)
    network.params[name][index] = original - step
    minus, _ = network.loss_and_grads(X, Y)
    network.params[name][index] = original
    return (plus - minus) / (2.0 * step)


def zeroed(network):
    network.params = {name: np.zeros_like(value) for name, value in network.params.items()}
    return network


def random_batch(samples=200, window=6, channels=3, seed=0, targets=None):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(samples, window, channels))
    Y = targets if targets is not None else rng.normal(size=(samples, 2))
    origins = pd.date_range("2024-01-01", periods=samples, freq="h")
    return SequenceBatch(X, Y, origins, tuple(VARIABLES[:channels]))


def test_window_counts(synthetic_series):
    batch = build_windows(synthetic_series[:100], 24)

    assert len(batch) == 76
    assert batch.X.shape == (76, 24, 7)
    assert batch.Y.shape == (76, 2)
    assert batch.origins[0] == synthetic_series.timestamps[24]


def test_window_holds_the_hours_before_its_target(synthetic_series):
    series = synthetic_series[:25]

    batch = build_windows(series, 24)

    assert len(batch) == 1
    np.testing.assert_array_equal(batch.X[0], series.frame[list(VARIABLES)].to_numpy()[:24])
    np.testing.assert_array_equal(batch.Y[0], series.frame[["temp", "humidity"]].to_numpy()[24])


@pytest.mark.parametrize("window", [25, 30])
def test_window_must_be_shorter_than_series(synthetic_series, window):
    with pytest.raises(SeriesTooShortError):
        build_windows(synthetic_series[:25], window)


def test_windows_ignore_later_observations(synthetic_series):
    t = 150
    frame = synthetic_series.frame.copy()
    frame.iloc[t:, :] = frame.iloc[t:, :] + 37.0

    original = build_windows(synthetic_series, 24)
    changed = build_windows(ObservationSeries(frame), 24)

    sample = original.origins.get_loc(synthetic_series.timestamps[t])
    np.testing.assert_array_equal(changed.X[: sample + 1], original.X[: sample + 1])


def test_restrict_keeps_listed_target_hours(synthetic_series):
    batch = build_windows(synthetic_series, 24)
    keep = batch.origins[[3, 10, 11]]

    restricted = batch.restrict(keep)

    assert list(restricted.origins) == list(keep)
    np.testing.assert_array_equal(restricted.X, batch.X[[3, 10, 11]])


def test_valid_convolution_length():
    rng = np.random.default_rng(0)
    out, pre = conv1d_forward(rng.normal(size=(2, 24, 7)), rng.normal(size=(3, 7, 32)), np.zeros(32))

    assert out.shape == (2, 22, 32)
    assert np.all(out >= 0)
    np.testing.assert_array_equal(out, np.maximum(pre, 0.0))


@pytest.mark.parametrize("c", [2.5, -1.0])
def test_averaging_kernel_on_constant_input(c):
    X = np.full((2, 24, 7), c)
    W = np.full((3, 7, 1), 1.0 / 21.0)

    out, pre = conv1d_forward(X, W, np.zeros(1))

    np.testing.assert_allclose(pre, c, rtol=0, atol=1e-12)
    np.testing.assert_allclose(out, max(c, 0.0), rtol=0, atol=1e-12)


def test_zero_kernel_outputs_bias():
    out, _ = conv1d_forward(np.random.default_rng(1).normal(size=(3, 10, 7)), np.zeros((3, 7, 4)), np.full(4, 0.7))

    np.testing.assert_array_equal(out, np.full((3, 8, 4), 0.7))


def test_kernel_longer_than_window_is_rejected():
    with pytest.raises(KernelTooLargeError):
        conv1d_forward(np.zeros((1, 2, 7)), np.zeros((3, 7, 1)), np.zeros(1))
    with pytest.raises(KernelTooLargeError):
        CnnLstmParams(kernel_size=5, window=4)


@pytest.mark.parametrize("activation", ["relu", "tanh"])
@pytest.mark.parametrize("conv", [None, (2, 3)])
def test_zero_network_outputs_dense_bias(activation, conv):
    network = zeroed(SequenceNetwork(3, 2, (4, 4), activation, conv).initialize(np.random.default_rng(2)))
    network.params["dense_b"] = np.array([18.0, 71.0])

    outputs = lstm_forward(network, np.random.default_rng(3).normal(size=(5, 6, 3)))

    np.testing.assert_array_equal(outputs, [[18.0, 71.0]] * 5)


def test_single_step_window_is_one_cell_update():
    rng = np.random.default_rng(4)
    network = SequenceNetwork(3, 2, (4,), "tanh").initialize(rng)
    X = rng.normal(size=(6, 1, 3))

    z = X[:, 0, :] @ network.params["lstm0_Wx"] + network.params["lstm0_b"]
    gates = 1.0 / (1.0 + np.exp(-z[:, :12]))
    cell = gates[:, :4] * np.tanh(z[:, 12:])
    hidden = gates[:, 8:12] * np.tanh(cell)
    expected = hidden @ network.params["dense_W"] + network.params["dense_b"]

    np.testing.assert_allclose(lstm_forward(network, X), expected, rtol=1e-12, atol=1e-12)


def test_identical_windows_give_identical_outputs():
    rng = np.random.default_rng(5)
    network = SequenceNetwork(3, 2, (4,)).initialize(rng)
    window = rng.normal(size=(1, 6, 3))

    outputs = lstm_forward(network, np.repeat(window, 4, axis=0))

    assert np.all(outputs == outputs[0])


def test_network_checks_channel_count():
    network = SequenceNetwork(3, 2, (4,)).initialize(np.random.default_rng(6))

    with pytest.raises(ShapeMismatchError):
        lstm_forward(network, np.zeros((2, 6, 4)))


@pytest.mark.parametrize("activation", ["relu", "tanh"])
@pytest.mark.parametrize("units,conv", [((4,), None), ((4, 3), None), ((4,), (3, 2))], ids=["lstm", "stacked", "cnn"])
def test_backpropagation_through_time_matches_finite_differences(activation, units, conv):
    rng = np.random.default_rng(7)
    network = SequenceNetwork(3, 2, units, activation, conv).initialize(rng)
    for name, value in network.params.items():
        network.params[name] = value + rng.normal(scale=0.1, size=value.shape)
    X, Y = rng.normal(size=(3, 5, 3)), rng.normal(size=(3, 2))

    _, grads = network.loss_and_grads(X, Y)

    assert set(grads) == set(network.params)
    for name, value in network.params.items():
        assert grads[name].shape == value.shape
        for index in np.ndindex(value.shape):
            analytic = grads[name][index]
            numeric = numeric_gradient(network, X, Y, name, index)
            assert abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6) < 1e-4, (name, index)


def test_constant_target_is_learned():
    batch = random_batch(targets=np.tile([0.5, -0.3], (200, 1)))
    params = LstmParams(units=4, window=6, learning_rate=0.01, patience=50, max_epochs=200)

    model = train_sequence_model(batch, params, seed=1)

    assert min(model.history_.val_loss) < 1e-4
    np.testing.assert_allclose(predict_sequence(model, batch[-20:]), [[0.5, -0.3]] * 20, atol=0.1)


def test_training_stops_within_patience_and_restores_best_weights():
    batch = random_batch(samples=120)
    params = LstmParams(units=4, window=6, learning_rate=0.01, patience=3, max_epochs=60)

    model = train_sequence_model(batch, params, seed=2)
    history = model.history_

    assert history.epochs <= history.best_epoch + params.patience
    tail = batch[-12:]
    scaled_error = model.y_scaler_.transform(predict_sequence(model, tail)) - model.y_scaler_.transform(tail.Y)
    assert np.mean(scaled_error**2) == pytest.approx(min(history.val_loss), rel=1e-9)


def test_cnn_lstm_trains_and_is_seeded():
    batch = random_batch(samples=80, window=8)
    params = CnnLstmParams(filters=3, kernel_size=3, units=4, window=8, max_epochs=3)

    first = train_sequence_model(batch, params, seed=3)
    again = train_sequence_model(batch, params, seed=3)

    assert isinstance(first, CnnLstmRegressor)
    np.testing.assert_array_equal(predict_sequence(first, batch), predict_sequence(again, batch))


def test_predictions_are_in_target_units():
    rng = np.random.default_rng(8)
    batch = random_batch(samples=60, targets=np.column_stack([rng.normal(15, 5, 60), rng.normal(70, 10, 60)]))

    model = train_sequence_model(batch, LstmParams(units=4, window=6, max_epochs=2), seed=4)
    predictions = predict_sequence(model, batch)

    assert abs(predictions[:, 0].mean() - 15.0) < 10.0
    assert abs(predictions[:, 1].mean() - 70.0) < 20.0


def test_target_scaling_round_trip():
    Y = np.random.default_rng(9).normal([15.0, 70.0], [5.0, 10.0], size=(50, 2))
    scaler = Standardizer.fit(Y)

    np.testing.assert_allclose(scaler.inverse_transform(scaler.transform(Y)), Y, rtol=0, atol=1e-10)


def test_window_length_is_part_of_the_model():
    batch = random_batch(samples=40)
    model = train_sequence_model(batch, LstmParams(units=3, window=6, max_epochs=1))

    with pytest.raises(ShapeMismatchError):
        model.predict(np.zeros((2, 5, 3)))
    with pytest.raises(ShapeMismatchError):
        model.predict(np.zeros((2, 18)))
    with pytest.raises(ShapeMismatchError):
        LstmRegressor(LstmParams(window=24)).fit(batch.X, batch.Y)


@pytest.mark.parametrize("kwargs", [{"window": 1}, {"units": 0}, {"cell_activation": "sigmoid"}])
def test_invalid_lstm_params(kwargs):
    with pytest.raises(InvalidParameterError):
        LstmParams(**kwargs)


@pytest.mark.parametrize(
    "params",
    [LstmParams(layers=2, units=3, window=6, max_epochs=2), CnnLstmParams(filters=2, units=3, window=6, max_epochs=2)],
    ids=["lstm", "cnn_lstm"],
)
def test_sequence_payload_survives_json(params):
    batch = random_batch(samples=40)
    model = train_sequence_model(batch, params, seed=5)

    restored = load_estimator(json.loads(json.dumps(model.to_payload())))

    assert type(restored) is type(model)
    np.testing.assert_array_equal(restored.predict(batch.X), model.predict(batch.X))
