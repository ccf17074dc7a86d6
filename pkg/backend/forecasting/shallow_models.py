"""
Epsilon-insensitive support vector regression with an RBF kernel, and a rectifier
multi-layer perceptron trained with Adam and early stopping.

Both expect standardized features; the family builders wrap them accordingly.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, EmptyDataError, InvalidParameterError
from .model_core import Regressor, as_targets, register_estimator
from .neural import Network, TrainingHistory, fit_with_early_stopping, glorot_uniform

logger = logging.getLogger(__name__)


def rbf_kernel(x, x_prime, gamma):
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape:
        raise DimensionMismatchError(f"Cannot compare vectors of shape {x.shape} and {x_prime.shape}")
    diff = x - x_prime
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_kernel_matrix(A, B, gamma):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"Inputs have {A.shape[1]} and {B.shape[1]} features")
    sq = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvrParams:
    C: float = 1.0
    gamma: float = 0.1
    epsilon: float = 0.1
    kkt_tol: float = 1e-3
    max_passes: int = 200_000

    def __post_init__(self):
        if self.C <= 0 or self.gamma <= 0:
            raise InvalidParameterError(f"C and gamma must be positive, got C={self.C}, gamma={self.gamma}")
        if self.epsilon < 0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.kkt_tol <= 0 or self.max_passes < 1:
            raise InvalidParameterError("kkt_tol must be positive and max_passes >= 1")


@dataclass
class SvrSolution:
    beta: np.ndarray
    bias: float
    converged: bool
    kkt_violation: float
    iterations: int
    objective_history: List[float] = field(default_factory=list)


def dual_objective(beta, K, y, epsilon):
    return float(-0.5 * beta @ K @ beta - epsilon * np.abs(beta).sum() + y @ beta)


def solve_svr_dual(K, y, params: SvrParams, track_objective=False):
    """
    Pairwise coordinate ascent over the 2n box-constrained variables (alpha, alpha*).

    Each step takes the maximal-violating pair; stops when the violation gap drops below kkt_tol.
    """
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([params.epsilon - y, params.epsilon + y])
    point = np.concatenate([np.arange(n), np.arange(n)])
    a = np.zeros(2 * n)
    G = p.copy()
    C = params.C
    diag = np.diag(K)
    history = []
    gap = math.inf
    iterations = 0

    while iterations < params.max_passes:
        score = -z * G
        up = ((z > 0) & (a < C)) | ((z < 0) & (a > 0))
        low = ((z > 0) & (a > 0)) | ((z < 0) & (a < C))
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = float(score[i] - score[j])
        if gap < params.kkt_tol:
            break

        ki, kj = point[i], point[j]
        curvature = max(diag[ki] + diag[kj] - 2.0 * K[ki, kj], 1e-12)
        room_i = C - a[i] if z[i] > 0 else a[i]
        room_j = a[j] if z[j] > 0 else C - a[j]
        step = min(gap / curvature, room_i, room_j)
        a[i] += z[i] * step
        a[j] -= z[j] * step
        # Clipped variables land exactly on their bound.
        if step == room_i:
            a[i] = C if z[i] > 0 else 0.0
        if step == room_j:
            a[j] = 0.0 if z[j] > 0 else C
        G += step * z * np.tile(K[:, ki] - K[:, kj], 2)
        iterations += 1
        if track_objective:
            history.append(-0.5 * float(a @ (G + p)))

    converged = gap < params.kkt_tol
    beta = a[:n] - a[n:]
    bias = -_rho(a, G, z, C)
    return SvrSolution(beta, bias, converged, max(gap, 0.0), iterations, history)


def _rho(a, G, z, C):
    zG = z * G
    free = (a > 0) & (a < C)
    if free.any():
        return float(zG[free].mean())
    at_upper = a >= C
    at_lower = a <= 0
    upper_side = (at_upper & (z < 0)) | (at_lower & (z > 0))
    lower_side = (at_upper & (z > 0)) | (at_lower & (z < 0))
    ub = zG[upper_side].min() if upper_side.any() else math.inf
    lb = zG[lower_side].max() if lower_side.any() else -math.inf
    return float((ub + lb) / 2.0)


@register_estimator("svr")
class SvrModel(Regressor):
    """Single-target RBF support vector regression; only points with nonzero coefficient are retained."""

    def __init__(self, params: SvrParams = SvrParams(), seed=0):
        self.params = params
        self.seed = seed
        self.support_ = None
        self.beta_ = None
        self.bias_ = 0.0
        self.converged_ = True
        self.kkt_violation_ = 0.0

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = as_targets(y)[:, 0]
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyDataError("Cannot fit SVR on zero rows")
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        K = rbf_kernel_matrix(X, X, self.params.gamma)
        solution = solve_svr_dual(K, y, self.params)
        if not solution.converged:
            logger.warning(
                "SVR stopped after %s iterations with KKT violation %.3g (tolerance %.3g)",
                solution.iterations,
                solution.kkt_violation,
                self.params.kkt_tol,
            )
        keep = solution.beta != 0.0
        self.support_ = X[keep]
        self.beta_ = solution.beta[keep]
        self.bias_ = solution.bias
        self.converged_ = solution.converged
        self.kkt_violation_ = solution.kkt_violation
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(f"SVR expects {self.n_features_} features, got {X.shape[1]}")
        if self.beta_.size == 0:
            return np.full((X.shape[0], 1), self.bias_)
        return (rbf_kernel_matrix(X, self.support_, self.params.gamma) @ self.beta_ + self.bias_).reshape(-1, 1)

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "n_features": self.n_features_,
            "support": self.support_.tolist(),
            "beta": self.beta_.tolist(),
            "bias": self.bias_,
            "converged": self.converged_,
            "kkt_violation": self.kkt_violation_,
        }

    @classmethod
    def from_payload(cls, payload):
        model = cls(SvrParams(**payload["params"]), payload["seed"])
        model.n_features_ = payload["n_features"]
        model.support_ = np.asarray(payload["support"], dtype=float).reshape(-1, model.n_features_)
        model.beta_ = np.asarray(payload["beta"], dtype=float)
        model.bias_ = payload["bias"]
        model.converged_ = payload["converged"]
        model.kkt_violation_ = payload["kkt_violation"]
        return model


def fit_svr(X, y, params: SvrParams = SvrParams(), seed=0):
    return SvrModel(params, seed).fit(X, y)


def predict_svr(model: SvrModel, X):
    return model.predict(X)[:, 0]


@dataclass(frozen=True)
class MlpParams:
    hidden_layers: Tuple[int, ...] = (100,)
    alpha: float = 0.001
    learning_rate: float = 0.001
    max_iter: int = 1500
    patience: int = 10
    validation_fraction: float = 0.1
    batch_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(width) for width in self.hidden_layers))
        if not self.hidden_layers or min(self.hidden_layers) < 1:
            raise InvalidParameterError(f"Hidden layer widths must be >= 1, got {self.hidden_layers}")
        if self.alpha < 0:
            raise InvalidParameterError(f"alpha must be >= 0, got {self.alpha}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.patience < 1 or self.batch_size < 1:
            raise InvalidParameterError("patience and batch_size must be >= 1")


class MlpNetwork(Network):
    """Dense layers W0..Wk; rectifier on hidden layers, linear output; L2 penalty on weights only."""

    def __init__(self, sizes, alpha=0.0):
        self.sizes = tuple(sizes)
        self.alpha = alpha
        self.params = {}

    @property
    def depth(self):
        return len(self.sizes) - 1

    def initialize(self, rng):
        self.params = {}
        for layer, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            self.params[f"W{layer}"] = glorot_uniform(rng, fan_in, fan_out)
            self.params[f"b{layer}"] = np.zeros(fan_out)
        return self

    def forward(self, X):
        if X.shape[1] != self.sizes[0]:
            raise DimensionMismatchError(f"Network expects {self.sizes[0]} inputs, got {X.shape[1]}")
        activations = [X]
        pre_activations = []
        a = X
        for layer in range(self.depth):
            z = a @ self.params[f"W{layer}"] + self.params[f"b{layer}"]
            pre_activations.append(z)
            a = np.maximum(z, 0.0) if layer < self.depth - 1 else z
            activations.append(a)
        return a, (activations, pre_activations)

    def backward(self, cache, d_out):
        activations, pre_activations = cache
        grads = {}
        delta = d_out
        for layer in reversed(range(self.depth)):
            grads[f"W{layer}"] = activations[layer].T @ delta
            grads[f"b{layer}"] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.params[f"W{layer}"].T) * (pre_activations[layer - 1] > 0)
        return grads

    def penalty(self, batch_size):
        if self.alpha == 0:
            return 0.0, {}
        scale = self.alpha / batch_size
        weights = {name: value for name, value in self.params.items() if name.startswith("W")}
        value = 0.5 * scale * sum(float((w**2).sum()) for w in weights.values())
        return value, {name: scale * w for name, w in weights.items()}


@register_estimator("mlp")
class MlpModel(Regressor):
    def __init__(self, params: MlpParams = MlpParams(), seed=0):
        self.params = params
        self.seed = seed
        self.network_ = None
        self.history_ = TrainingHistory()

    def fit(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = as_targets(Y)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyDataError("Cannot fit an MLP on zero rows")
        rng = np.random.default_rng(self.seed)
        sizes = (X.shape[1],) + self.params.hidden_layers + (Y.shape[1],)
        self.network_ = MlpNetwork(sizes, self.params.alpha).initialize(rng)
        self.history_ = fit_with_early_stopping(
            self.network_,
            X,
            Y,
            learning_rate=self.params.learning_rate,
            batch_size=self.params.batch_size,
            max_epochs=self.params.max_iter,
            patience=self.params.patience,
            validation_fraction=self.params.validation_fraction,
            rng=rng,
        )
        return self

    def predict(self, X):
        return self.network_.predict(np.atleast_2d(np.asarray(X, dtype=float)))

    def to_payload(self):
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "seed": self.seed,
            "sizes": list(self.network_.sizes),
            "weights": self.network_.weights_payload(),
        }

    @classmethod
    def from_payload(cls, payload):
        params = MlpParams(**payload["params"])
        model = cls(params, payload["seed"])
        model.network_ = MlpNetwork(payload["sizes"], params.alpha)
        model.network_.load_weights(payload["weights"])
        return model


def fit_mlp(X, Y, params: MlpParams = MlpParams(), seed=0):
    return MlpModel(params, seed).fit(X, Y)


def predict_mlp(model: MlpModel, X):
    return model.predict(X)
