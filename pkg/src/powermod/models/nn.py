"""Feed-forward neural power model trained by mini-batch gradient descent.

Small fully connected nets (default one hidden layer of 16 units, sigmoid
activation, linear output) on squared error. Initialization and batch order
are seeded, so training is reproducible. Training that produces a non-finite
loss, or ends worse than it started, raises ``DivergenceError``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import CounterSchema, NormalizationParams
from ..errors import DivergenceError, EmptyDatasetError
from ..util import rng_for


@dataclass(frozen=True)
class NnConfig:
    hidden: tuple[int, ...] = (16,)
    activation: str = "sigmoid"  # sigmoid | relu | linear
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("need at least one hidden layer of positive width")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.activation not in ("sigmoid", "relu", "linear"):
            raise ValueError("activation must be sigmoid|relu|linear")


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_deriv_from_output(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "relu":
        return (a > 0.0).astype(np.float64)
    return np.ones_like(a)


@dataclass
class NnModel:
    schema: CounterSchema
    normalization: NormalizationParams
    weights: list[np.ndarray]  # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]
    activation: str
    config: NnConfig
    loss_history: list[float] = field(default_factory=list)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def predict_normalized(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = _act(h @ w + b, self.activation)
        out = h @ self.weights[-1] + self.biases[-1]
        return out[:, 0]

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        pred = self.predict_normalized(x)
        return float(np.mean((pred - y) ** 2))

    def loss_and_gradients(self, x: np.ndarray, y: np.ndarray):
        """Mean squared error and its gradients w.r.t. every weight/bias."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        m = x.shape[0]
        activations = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = _act(h @ w + b, self.activation)
            activations.append(h)
        out = (h @ self.weights[-1] + self.biases[-1])[:, 0]
        loss = float(np.mean((out - y) ** 2))

        grad_w = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        delta = (2.0 / m) * (out - y)[:, None]  # (m, 1)
        grad_w[-1] = activations[-1].T @ delta
        grad_b[-1] = delta.sum(axis=0)
        upstream = delta @ self.weights[-1].T
        for layer in range(len(self.weights) - 2, -1, -1):
            upstream = upstream * _act_deriv_from_output(activations[layer + 1], self.activation)
            grad_w[layer] = activations[layer].T @ upstream
            grad_b[layer] = upstream.sum(axis=0)
            if layer > 0:
                upstream = upstream @ self.weights[layer].T
        return loss, grad_w, grad_b


def init_model(
    n_features: int,
    schema: CounterSchema,
    normalization: NormalizationParams,
    config: NnConfig,
    output_bias: float = 0.0,
) -> NnModel:
    rng = rng_for(config.rng_seed, 31)
    sizes = [n_features, *config.hidden, 1]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    biases[-1][0] = output_bias
    return NnModel(
        schema=schema,
        normalization=normalization,
        weights=weights,
        biases=biases,
        activation=config.activation,
        config=config,
    )


def fit_nn_xy(
    x: np.ndarray,
    y: np.ndarray,
    schema: CounterSchema,
    normalization: NormalizationParams,
    config: NnConfig | None = None,
) -> NnModel:
    config = config or NnConfig()
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyDatasetError("cannot fit on an empty training set")
    model = init_model(x.shape[1], schema, normalization, config, output_bias=float(y.mean()))
    rng = rng_for(config.rng_seed, 32)
    n = x.shape[0]
    batch = min(config.batch_size, n)
    initial = model.loss(x, y)
    model.loss_history.append(initial)
    lr = config.learning_rate
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is detected below
            for start in range(0, n, batch):
                rows = perm[start : start + batch]
                _, grad_w, grad_b = model.loss_and_gradients(x[rows], y[rows])
                for layer in range(len(model.weights)):
                    model.weights[layer] -= lr * grad_w[layer]
                    model.biases[layer] -= lr * grad_b[layer]
            epoch_loss = model.loss(x, y)
        if not np.isfinite(epoch_loss):
            raise DivergenceError(f"diverged at epoch {epoch}", epoch=epoch)
        model.loss_history.append(epoch_loss)
    if model.loss_history[-1] > initial:
        raise DivergenceError(
            f"training ended worse than it started "
            f"({model.loss_history[-1]:.4g} > {initial:.4g})",
            epoch=config.epochs - 1,
        )
    return model


def fit_nn(
    train,
    schema: CounterSchema,
    normalization: NormalizationParams,
    config: NnConfig | None = None,
) -> NnModel:
    if not train:
        raise EmptyDatasetError("cannot fit on an empty training set")
    x = np.stack([v.counters for v in train])
    y = np.array([v.p_dynamic for v in train], dtype=np.float64)
    return fit_nn_xy(x, y, schema, normalization, config)
