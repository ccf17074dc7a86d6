"""
Sliding-window sequence datasets and recurrent regressors (stacked LSTM and a
convolution-then-LSTM variant) with hand-written backpropagation through time.

Windows cover the W hours before each target hour, so a prediction for hour t never
sees observations at or after t.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .exceptions import EmptyDataError, InvalidParameterError, KernelTooLargeError, SeriesTooShortError, ShapeMismatchError
from .features import TARGETS, Standardizer
from .model_core import Regressor, as_targets, register_estimator
from .neural import Network, TrainingHistory, fit_with_early_stopping, glorot_uniform, orthogonal
from .timeseries_data import VARIABLES

logger = logging.getLogger(__name__)

GATES = 4  # input, forget, output, candidate


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _relu_grad(z, a):
    return (z > 0).astype(float)


def _tanh_grad(z, a):
    return 1.0 - a * a


ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
}


@dataclass(frozen=True)
class SequenceBatch:
    X: np.ndarray
    Y: np.ndarray
    origins: pd.DatetimeIndex
    channels: Tuple[str, ...] = VARIABLES

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, key):
        return SequenceBatch(self.X[key], self.Y[key], self.origins[key], self.channels)

    @property
    def window(self):
        return self.X.shape[1]

    def restrict(self, timestamps):
        """Keep only samples whose target hour is in `timestamps`."""
        return self[np.flatnonzero(self.origins.isin(timestamps))]


def build_windows(series, window, channels=VARIABLES, targets=TARGETS) -> SequenceBatch:
    """One sample per target hour t in [W, n): inputs are rows t-W..t-1, outputs the targets at t."""
    n = len(series)
    if window < 1:
        raise InvalidParameterError(f"Window must be >= 1, got {window}")
    if n <= window:
        raise SeriesTooShortError(f"Series of {n} rows is too short for windows of {window} hours")
    values = series.frame[list(channels)].to_numpy(dtype=float)
    X = np.lib.stride_tricks.sliding_window_view(values, window, axis=0)[: n - window].transpose(0, 2, 1).copy()
    Y = series.frame[list(targets)].to_numpy(dtype=float)[window:]
    return SequenceBatch(X, Y, series.timestamps[window:], tuple(channels))


def conv1d_forward(X, W, b):
    """Valid temporal convolution with rectifier; X is (samples, W, channels), W is (kernel, channels, filters)."""
    kernel = W.shape[0]
    steps = X.shape[1]
    if kernel > steps:
        raise KernelTooLargeError(f"Kernel of {kernel} steps does not fit windows of {steps} steps")
    if X.shape[2] != W.shape[1]:
        raise ShapeMismatchError(f"Convolution expects {W.shape[1]} channels, got {X.shape[2]}")
    length = steps - kernel + 1
    pre = np.broadcast_to(b, (X.shape[0], length, W.shape[2])).copy()
    for k in range(kernel):
        pre += X[:, k : k + length, :] @ W[k]
    return np.maximum(pre, 0.0), pre


def conv1d_backward(X, W, pre, d_out):
    kernel = W.shape[0]
    length = pre.shape[1]
    d_pre = d_out * (pre > 0)
    dW = np.stack([np.einsum("blc,blf->cf", X[:, k : k + length, :], d_pre) for k in range(kernel)])
    return dW, d_pre.sum(axis=(0, 1))


def lstm_layer_forward(X, Wx, Wh, b, activation="relu"):
    """Run one LSTM layer over every step from zero state; returns the hidden sequence and the step caches."""
    act, _ = ACTIVATIONS[activation]
    samples, steps, _ = X.shape
    units = Wh.shape[0]
    if X.shape[2] != Wx.shape[0]:
        raise ShapeMismatchError(f"LSTM layer expects {Wx.shape[0]} inputs per step, got {X.shape[2]}")
    h = np.zeros((samples, units))
    c = np.zeros((samples, units))
    H = np.empty((samples, steps, units))
    caches = []
    for t in range(steps):
        z = X[:, t, :] @ Wx + h @ Wh + b
        i = _sigmoid(z[:, :units])
        f = _sigmoid(z[:, units : 2 * units])
        o = _sigmoid(z[:, 2 * units : 3 * units])
        g_pre = z[:, 3 * units :]
        g = act(g_pre)
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        c_act = act(c)
        h = o * c_act
        H[:, t, :] = h
        caches.append((h_prev, c_prev, i, f, o, g_pre, g, c, c_act))
    return H, caches


def lstm_layer_backward(X, Wx, Wh, caches, dH, activation="relu"):
    _, act_grad = ACTIVATIONS[activation]
    units = Wh.shape[0]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(GATES * units)
    dX = np.zeros_like(X)
    dh_next = np.zeros((X.shape[0], units))
    dc_next = np.zeros((X.shape[0], units))
    for t in reversed(range(X.shape[1])):
        h_prev, c_prev, i, f, o, g_pre, g, c, c_act = caches[t]
        dh = dH[:, t, :] + dh_next
        do = dh * c_act
        dc = dc_next + dh * o * act_grad(c, c_act)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * act_grad(g_pre, g)],
            axis=1,
        )
        dWx += X[:, t, :].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dX[:, t, :] = dz @ Wx.T
        dh_next = dz @ Wh.T
    return dWx, dWh, db, dX


class SequenceNetwork(Network):
    """Optional convolution, stacked LSTM layers, then a dense head on the last hidden state."""

    def __init__(self, channels, outputs, units, activation="relu", conv: Optional[Tuple[int, int]] = None):
        if activation not in ACTIVATIONS:
            raise InvalidParameterError(f"Unknown cell activation {activation!r}; expected one of {', '.join(ACTIVATIONS)}")
        self.channels = channels
        self.outputs = outputs
        self.units = tuple(units)
        self.activation = activation
        self.conv = tuple(conv) if conv else None
        self.params = {}

    def initialize(self, rng):
        params = {}
        width = self.channels
        if self.conv:
            filters, kernel = self.conv
            params["conv_W"] = glorot_uniform(rng, kernel * width, filters, shape=(kernel, width, filters))
            params["conv_b"] = np.zeros(filters)
            width = filters
        for layer, units in enumerate(self.units):
            params[f"lstm{layer}_Wx"] = glorot_uniform(rng, width, GATES * units)
            params[f"lstm{layer}_Wh"] = orthogonal(rng, units, GATES * units)
            bias = np.zeros(GATES * units)
            bias[units : 2 * units] = 1.0
            params[f"lstm{layer}_b"] = bias
            width = units
        params["dense_W"] = glorot_uniform(rng, width, self.outputs)
        params["dense_b"] = np.zeros(self.outputs)
        self.params = params
        return self

    def forward(self, X):
        if X.ndim != 3 or X.shape[2] != self.channels:
            raise ShapeMismatchError(f"Expected windows with {self.channels} channels, got shape {X.shape}")
        cache = {"inputs": []}
        sequence = X
        if self.conv:
            sequence, cache["conv_pre"] = conv1d_forward(X, self.params["conv_W"], self.params["conv_b"])
        for layer in range(len(self.units)):
            cache["inputs"].append(sequence)
            sequence, steps = lstm_layer_forward(
                sequence,
                self.params[f"lstm{layer}_Wx"],
                self.params[f"lstm{layer}_Wh"],
                self.params[f"lstm{layer}_b"],
                self.activation,
            )
            cache[f"lstm{layer}"] = steps
        last = sequence[:, -1, :]
        cache["last"] = last
        cache["steps"] = sequence.shape[1]
        cache["X"] = X
        return last @ self.params["dense_W"] + self.params["dense_b"], cache

    def backward(self, cache, d_out):
        grads = {
            "dense_W": cache["last"].T @ d_out,
            "dense_b": d_out.sum(axis=0),
        }
        dH = np.zeros((d_out.shape[0], cache["steps"], self.units[-1]))
        dH[:, -1, :] = d_out @ self.params["dense_W"].T
        for layer in reversed(range(len(self.units))):
            dWx, dWh, db, dH = lstm_layer_backward(
                cache["inputs"][layer],
                self.params[f"lstm{layer}_Wx"],
                self.params[f"lstm{layer}_Wh"],
                cache[f"lstm{layer}"],
                dH,
                self.activation,
            )
            grads[f"lstm{layer}_Wx"], grads[f"lstm{layer}_Wh"], grads[f"lstm{layer}_b"] = dWx, dWh, db
        if self.conv:
            grads["conv_W"], grads["conv_b"] = conv1d_backward(cache["X"], self.params["conv_W"], cache["conv_pre"], dH)
        return grads

    def describe(self):
        return {
            "channels": self.channels,
            "outputs": self.outputs,
            "units": list(self.units),
            "activation": self.activation,
            "conv": list(self.conv) if self.conv else None,
        }

    @classmethod
    def from_description(cls, description):
        return cls(**description)


def lstm_forward(network: SequenceNetwork, X):
    return network.predict(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class LstmParams:
    layers: int = 1
    units: int = 50
    cell_activation: str = "relu"
    learning_rate: float = 0.001
    patience: int = 10
    window: int = 24
    batch_size: int = 32
    max_epochs: int = 100
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.layers < 1 or self.units < 1:
            raise InvalidParameterError(f"layers and units must be >= 1, got {self.layers}, {self.units}")
        if self.window < 2:
            raise InvalidParameterError(f"window must be >= 2, got {self.window}")
        if self.cell_activation not in ACTIVATIONS:
            raise InvalidParameterError(f"cell_activation must be one of {', '.join(ACTIVATIONS)}")

    def architecture(self, channels, outputs):
        return SequenceNetwork(channels, outputs, (self.units,) * self.layers, self.cell_activation)


@dataclass(frozen=True)
class CnnLstmParams:
    filters: int = 32
    kernel_size: int = 3
    units: int = 50
    layers: int = 1
    cell_activation: str = "relu"
    learning_rate: float = 0.001
    patience: int = 10
    window: int = 24
    batch_size: int = 32
    max_epochs: int = 100
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.filters < 1 or self.units < 1 or self.layers < 1:
            raise InvalidParameterError("filters, units and layers must be >= 1")
        if self.kernel_size > self.window:
            raise KernelTooLargeError(f"kernel_size {self.kernel_size} exceeds window {self.window}")
        if self.cell_activation not in ACTIVATIONS:
            raise InvalidParameterError(f"cell_activation must be one of {', '.join(ACTIVATIONS)}")

    def architecture(self, channels, outputs):
        return SequenceNetwork(
            channels,
            outputs,
            (self.units,) * self.layers,
            self.cell_activation,
            conv=(self.filters, self.kernel_size),
        )


class SequenceRegressor(Regressor):
    """
    Trains on raw-scale windows (samples, W, channels).

    Channels and targets are z-scored with statistics of the training windows and
    predictions are returned in the original units.
    """

    params_class = LstmParams

    def __init__(self, params=None, seed=0):
        self.params = params or self.params_class()
        self.seed = seed
        self.network_ = None
        self.x_scaler_ = None
        self.y_scaler_ = None
        self.history_ = TrainingHistory()

    def _windows(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 3:
            raise ShapeMismatchError(f"Sequence models take (samples, window, channels) input, got shape {X.shape}")
        return X

    def fit(self, X, Y):
        X = self._windows(X)
        Y = as_targets(Y)
        if X.shape[0] == 0:
            raise EmptyDataError("Cannot fit a sequence model on zero samples")
        if X.shape[1] != self.params.window:
            raise ShapeMismatchError(f"Windows have {X.shape[1]} steps but the model is configured for {self.params.window}")
        channels = X.shape[2]
        self.x_scaler_ = Standardizer.fit(X.reshape(-1, channels))
        self.y_scaler_ = Standardizer.fit(Y)
        rng = np.random.default_rng(self.seed)
        self.network_ = self.params.architecture(channels, Y.shape[1]).initialize(rng)
        self.history_ = fit_with_early_stopping(
            self.network_,
            self._scale(X),
            self.y_scaler_.transform(Y),
            learning_rate=self.params.learning_rate,
            batch_size=self.params.batch_size,
            max_epochs=self.params.max_epochs,
            patience=self.params.patience,
            validation_fraction=self.params.validation_fraction,
            rng=rng,
        )
        return self

    def _scale(self, X):
        return self.x_scaler_.transform(X.reshape(-1, X.shape[2])).reshape(X.shape)

    def predict(self, X):
        X = self._windows(X)
        if X.shape[1] != self.params.window or X.shape[2] != self.network_.channels:
            raise ShapeMismatchError(
                f"Model expects windows of shape ({self.params.window}, {self.network_.channels}), got {X.shape[1:]}"
            )
        return self.y_scaler_.inverse_transform(self.network_.predict(self._scale(X)))

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "architecture": self.network_.describe(),
            "x_scaler": self.x_scaler_.to_dict(),
            "y_scaler": self.y_scaler_.to_dict(),
            "weights": self.network_.weights_payload(),
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(cls.params_class(**payload["params"]), payload["seed"])
        model.network_ = SequenceNetwork.from_description(payload["architecture"])
        model.network_.load_weights(payload["weights"])
        model.x_scaler_ = Standardizer.from_dict(payload["x_scaler"])
        model.y_scaler_ = Standardizer.from_dict(payload["y_scaler"])
        return model


@register_estimator("lstm")
class LstmRegressor(SequenceRegressor):
    params_class = LstmParams


@register_estimator("cnn_lstm")
class CnnLstmRegressor(SequenceRegressor):
    params_class = CnnLstmParams


def train_sequence_model(batch: SequenceBatch, params, seed=0):
    cls = CnnLstmRegressor if isinstance(params, CnnLstmParams) else LstmRegressor
    return cls(params, seed).fit(batch.X, batch.Y)


def predict_sequence(model: SequenceRegressor, batch: SequenceBatch):
    return model.predict(batch.X)
