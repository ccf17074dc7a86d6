"""
Shared pieces of the gradient-trained models: weight initialisers, the Adam optimiser
and the mini-batch training loop with patience-based early stopping.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .exceptions import DivergedLossError, EmptyDataError, InvalidParameterError

logger = logging.getLogger(__name__)


def glorot_uniform(rng, fan_in, fan_out, shape=None):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def orthogonal(rng, rows, cols):
    """Matrix with orthonormal rows or columns, whichever is shorter."""
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


class Network(ABC):
    """Parameter dictionary plus forward and backward passes; loss is mean squared error over every output."""

    params: Dict[str, np.ndarray]

    @abstractmethod
    def forward(self, X):
        """Return (outputs, cache)."""

    @abstractmethod
    def backward(self, cache, d_out) -> Dict[str, np.ndarray]:
        ...

    def penalty(self, batch_size):
        return 0.0, {}

    def predict(self, X):
        return self.forward(X)[0]

    def loss_and_grads(self, X, Y):
        outputs, cache = self.forward(X)
        diff = outputs - Y
        loss = float(np.mean(diff**2))
        grads = self.backward(cache, 2.0 * diff / diff.size)
        extra, extra_grads = self.penalty(X.shape[0])
        for name, grad in extra_grads.items():
            grads[name] = grads[name] + grad
        return loss + extra, grads

    def weights_payload(self):
        return {name: {"shape": list(value.shape), "values": value.ravel().tolist()} for name, value in self.params.items()}

    def load_weights(self, payload):
        self.params = {
            name: np.asarray(item["values"], dtype=float).reshape(item["shape"]) for name, item in payload.items()
        }


class Adam:
    def __init__(self, params, learning_rate=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        if learning_rate <= 0:
            raise InvalidParameterError(f"learning_rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params, grads):
        """Update params in place."""
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainingHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs(self):
        return len(self.val_loss)


def validation_tail(n, fraction):
    """Row counts (train, validation) with the validation rows taken from the chronological end."""
    if not 0.0 < fraction < 1.0:
        raise InvalidParameterError(f"validation_fraction must lie in (0, 1), got {fraction}")
    n_val = max(1, math.ceil(fraction * n))
    n_train = n - n_val
    if n_train < 2:
        raise EmptyDataError(f"{n} samples leave fewer than 2 training rows after carving the validation tail")
    return n_train, n_val


def fit_with_early_stopping(
    network: Network,
    X,
    Y,
    *,
    learning_rate,
    batch_size,
    max_epochs,
    patience,
    validation_fraction,
    rng,
):
    """
    Mini-batch Adam on the leading rows, validation MSE on the trailing rows after every epoch.

    Stops after `patience` epochs without improvement or at `max_epochs`, then restores the
    parameters of the best validation epoch.
    """
    if max_epochs < 1:
        raise InvalidParameterError(f"Training needs at least one epoch, got max_epochs={max_epochs}")
    n_train, _ = validation_tail(len(X), validation_fraction)
    X_train, Y_train = X[:n_train], Y[:n_train]
    X_val, Y_val = X[n_train:], Y[n_train:]

    optimizer = Adam(network.params, learning_rate)
    history = TrainingHistory()
    best_loss = math.inf
    best_params = {name: value.copy() for name, value in network.params.items()}
    stale = 0

    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, batch_size):
            rows = order[start : start + batch_size]
            loss, grads = network.loss_and_grads(X_train[rows], Y_train[rows])
            if not math.isfinite(loss):
                raise DivergedLossError(f"Non-finite training loss at epoch {epoch}")
            optimizer.step(network.params, grads)
            batch_losses.append(loss)

        val_loss = float(np.mean((network.predict(X_val) - Y_val) ** 2))
        if not math.isfinite(val_loss):
            raise DivergedLossError(f"Non-finite validation loss at epoch {epoch}")
        history.train_loss.append(float(np.mean(batch_losses)))
        history.val_loss.append(val_loss)

        if val_loss < best_loss:
            best_loss = val_loss
            history.best_epoch = epoch
            best_params = {name: value.copy() for name, value in network.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break

    network.params = best_params
    logger.debug("Stopped after %s epochs; best epoch %s with validation MSE %.6g", history.epochs, history.best_epoch, best_loss)
    return history
