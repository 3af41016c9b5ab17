"""Linear and multilayer-perceptron classifiers trained by plain
mini-batch gradient descent on (optionally alpha-weighted) cross-entropy.

Training is resumable and bit-reproducible: the weight init draws from a
named sub-stream of the seed, and epoch k's shuffle draws from the
(k-indexed) epoch stream, so training E epochs in one call equals
training them round by round. Logistic regression is the zero-hidden-layer
special case of the same engine, so the two share trajectories exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._rng import rng_for
from ..errors import DataError, NumericError
from .losses import sample_weights, softplus


@dataclass
class TrainConfig:
    eta: float = 0.05
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        # eta == 0 is allowed: a frozen step, useful for no-op round checks
        if self.eta < 0:
            raise DataError(f"eta must be >= 0, got {self.eta}")
        if self.epochs < 1 or self.batch_size < 1:
            raise DataError("epochs and batch_size must be positive")


@dataclass
class MlpModel:
    """Stack of (fan_in, fan_out) weight matrices with rectifier hidden
    activations and a single sigmoid output unit."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    alpha: float | None = None
    epochs_trained: int = 0
    loss_history: list[float] = field(default_factory=list)

    @property
    def architecture(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "MlpModel":
        return MlpModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.alpha,
            self.epochs_trained,
            list(self.loss_history),
        )


@dataclass
class LinearModel:
    """Logistic regression: p = sigmoid(w.x + b)."""

    weights: np.ndarray
    bias: float
    alpha: float | None = None
    loss_history: list[float] = field(default_factory=list)


def sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def init_mlp(architecture: list[int], alpha: float | None, seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases, drawn from the init sub-stream."""
    if len(architecture) < 2 or architecture[-1] != 1:
        raise DataError(f"architecture must end in 1 output unit, got {architecture}")
    if any(size < 1 for size in architecture):
        raise DataError(f"architecture sizes must be positive, got {architecture}")
    rng = rng_for(seed, "init")
    weights, biases = [], []
    for fan_in, fan_out in zip(architecture[:-1], architecture[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, alpha)


def _forward(model: MlpModel, X):
    """Per-layer activations; the last entry is the output pre-activation."""
    activations = [X]
    h = X
    last = len(model.weights) - 1
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        a = h @ W + b
        if l < last:
            h = np.maximum(a, 0.0)
            activations.append(h)
        else:
            activations.append(a)
    return activations


def mlp_raw_score(model: MlpModel, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.weights[0].shape[0]:
        raise DataError(
            f"mlp: input has {X.shape[1]} features, model expects {model.weights[0].shape[0]}"
        )
    return _forward(model, X)[-1][:, 0]


def mlp_predict_proba(model: MlpModel, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    p = sigmoid(mlp_raw_score(model, x))
    return float(p[0]) if single else p


def mean_loss(model: MlpModel, X, y) -> float:
    """Mean (weighted) cross-entropy over the dataset, computed from the
    pre-activation for stability."""
    a = mlp_raw_score(model, X)
    y = np.asarray(y, dtype=np.float64)
    w = sample_weights(y, model.alpha)
    per_sample = w * softplus(np.where(y == 1, -a, a))
    return float(per_sample.mean())


def loss_and_grads(model: MlpModel, X, y):
    """Mean weighted loss plus gradients for every weight matrix and bias."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    w = sample_weights(y, model.alpha)
    activations = _forward(model, X)
    a_out = activations[-1][:, 0]
    loss = float((w * softplus(np.where(y == 1, -a_out, a_out))).mean())

    delta = (w * (sigmoid(a_out) - y) / n)[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        h_prev = activations[l]
        grads_w[l] = h_prev.T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l].T) * (activations[l] > 0)
    return loss, grads_w, grads_b


def train_epochs(model: MlpModel, X, y, config: TrainConfig, epochs: int) -> MlpModel:
    """Continue training for ``epochs`` more epochs; returns a new model.

    The epoch index picks the shuffle stream, so resumed training matches
    an uninterrupted run bit for bit.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DataError("train: X and y shapes disagree")
    model = model.copy()
    n = X.shape[0]
    for epoch in range(model.epochs_trained, model.epochs_trained + epochs):
        order = rng_for(config.seed, "epoch", epoch).permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grads_w, grads_b = loss_and_grads(model, X[batch], y[batch])
            for l in range(len(model.weights)):
                model.weights[l] -= config.eta * grads_w[l]
                model.biases[l] -= config.eta * grads_b[l]
        epoch_loss = mean_loss(model, X, y)
        finite_params = all(
            np.all(np.isfinite(w)) and np.all(np.isfinite(b))
            for w, b in zip(model.weights, model.biases)
        )
        if not np.isfinite(epoch_loss) or not finite_params:
            raise NumericError(f"training diverged: non-finite loss or weights at epoch {epoch}")
        model.loss_history.append(epoch_loss)
        model.epochs_trained = epoch + 1
    return model


def mlp_fit(X, y, architecture: list[int], alpha: float | None, config: TrainConfig) -> MlpModel:
    model = init_mlp(architecture, alpha, config.seed)
    return train_epochs(model, X, y, config, config.epochs)


def logreg_fit(X, y, alpha: float | None, config: TrainConfig) -> LinearModel:
    """Weighted logistic regression as a zero-hidden-layer net."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    net = mlp_fit(X, y, [X.shape[1], 1], alpha, config)
    return LinearModel(net.weights[0][:, 0].copy(), float(net.biases[0][0]), alpha,
                       list(net.loss_history))


def linear_predict_proba(model: LinearModel, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.weights.shape[0]:
        raise DataError(
            f"linear: input has {rows.shape[1]} features, model expects {model.weights.shape[0]}"
        )
    p = sigmoid(rows @ model.weights + model.bias)
    return float(p[0]) if single else p


def linear_as_mlp(model: LinearModel) -> MlpModel:
    """View a LinearModel as a single-layer net (for shared gradient code)."""
    return MlpModel([model.weights[:, None].copy()], [np.array([model.bias])], model.alpha)


def clone_with_params(model: MlpModel, flat: np.ndarray) -> MlpModel:
    """Rebuild a model from a flat parameter vector (grad-check helper)."""
    out = model.copy()
    cursor = 0
    for l in range(len(out.weights)):
        size = out.weights[l].size
        out.weights[l] = flat[cursor : cursor + size].reshape(out.weights[l].shape).copy()
        cursor += size
        size = out.biases[l].size
        out.biases[l] = flat[cursor : cursor + size].reshape(out.biases[l].shape).copy()
        cursor += size
    return out


def flatten_params(model: MlpModel) -> np.ndarray:
    parts = []
    for W, b in zip(model.weights, model.biases):
        parts.append(W.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def flatten_grads(grads_w, grads_b) -> np.ndarray:
    parts = []
    for gW, gb in zip(grads_w, grads_b):
        parts.append(gW.ravel())
        parts.append(gb.ravel())
    return np.concatenate(parts)


def deep_copy_models(models: list[MlpModel]) -> list[MlpModel]:
    return [m.copy() for m in models]


__all__ = [
    "TrainConfig",
    "MlpModel",
    "LinearModel",
    "sigmoid",
    "init_mlp",
    "mlp_fit",
    "mlp_raw_score",
    "mlp_predict_proba",
    "mean_loss",
    "loss_and_grads",
    "train_epochs",
    "logreg_fit",
    "linear_predict_proba",
    "linear_as_mlp",
    "clone_with_params",
    "flatten_params",
    "flatten_grads",
    "deep_copy_models",
]
