"""Feed-forward network with a logistic output, trained by mini-batch
gradient descent with momentum.

Hidden widths default to the fixed fractions {1.2p, 0.9p, 0.6p, 0.3p} of the
input dimension, rounded and truncated to the requested depth.  Schedules:
constant; invscaling lr0/sqrt(t) over update count t; adaptive divides the
rate by 5 after two consecutive non-improving epochs.  Training stops early
after 10 epochs without loss improvement beyond `tol`.
"""

from __future__ import annotations

import numpy as np

from .linear import _sigmoid

_FRACTIONS = (1.2, 0.9, 0.6, 0.3)

ACTIVATIONS = ("relu", "logistic", "tanh")
SCHEDULES = ("constant", "invscaling", "adaptive")


def dynamic_hidden_sizes(p: int, depth: int) -> tuple[int, ...]:
    if not 1 <= depth <= len(_FRACTIONS):
        raise ValueError(f"depth must be in 1..{len(_FRACTIONS)}")
    return tuple(max(1, round(f * p)) for f in _FRACTIONS[:depth])


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "logistic":
        return _sigmoid(z)
    return np.tanh(z)


def _act_grad(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (a > 0.0).astype(np.float64)
    if kind == "logistic":
        return a * (1.0 - a)
    return 1.0 - a * a


class MLPModel:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray], activation: str) -> None:
        self.weights = weights
        self.biases = biases
        self.activation = activation

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        a = X
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = _act(a @ w + b, self.activation)
        z = a @ self.weights[-1] + self.biases[-1]
        return _sigmoid(z[:, 0])

    def to_dict(self) -> dict:
        return {
            "activation": self.activation,
            "weights": [[list(map(float, row)) for row in w] for w in self.weights],
            "biases": [list(map(float, b)) for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPModel":
        return cls(
            weights=[np.array(w, dtype=np.float64) for w in d["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in d["biases"]],
            activation=d["activation"],
        )


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    hidden_layer_sizes: tuple[int, ...] | None = None,
    activation: str = "relu",
    learning_rate: str = "constant",
    learning_rate_init: float = 0.05,
    max_iter: int = 200,
    batch_size: int | None = None,
    momentum: float = 0.9,
    tol: float = 1e-4,
    n_iter_no_change: int = 10,
    seed: int = 0,
) -> MLPModel:
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if learning_rate not in SCHEDULES:
        raise ValueError(f"unknown learning rate schedule {learning_rate!r}")
    n, p = X.shape
    sizes = [p, *(hidden_layer_sizes or dynamic_hidden_sizes(p, 2)), 1]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    batch = min(batch_size or 200, n)
    lr = learning_rate_init
    best_loss = np.inf
    stall = 0
    adapt_stall = 0
    t = 0
    for _ in range(max_iter):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            rows = perm[start : start + batch]
            xb, yb = X[rows], y[rows]
            t += 1
            if learning_rate == "invscaling":
                lr = learning_rate_init / np.sqrt(t)
            # Forward pass keeping activations.
            acts = [xb]
            for w, b in zip(weights[:-1], biases[:-1]):
                acts.append(_act(acts[-1] @ w + b, activation))
            z = acts[-1] @ weights[-1] + biases[-1]
            prob = _sigmoid(z[:, 0])
            delta = ((prob - yb) / rows.shape[0])[:, None]
            for layer in range(len(weights) - 1, -1, -1):
                gw = acts[layer].T @ delta
                gb = delta.sum(axis=0)
                if layer > 0:
                    delta = (delta @ weights[layer].T) * _act_grad(acts[layer], activation)
                vel_w[layer] = momentum * vel_w[layer] - lr * gw
                vel_b[layer] = momentum * vel_b[layer] - lr * gb
                weights[layer] += vel_w[layer]
                biases[layer] += vel_b[layer]
        model = MLPModel(weights, biases, activation)
        prob = np.clip(model.predict_proba(X), 1e-12, 1.0 - 1e-12)
        loss = float(-np.mean(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)))
        if loss < best_loss - tol:
            best_loss = loss
            stall = 0
            adapt_stall = 0
        else:
            stall += 1
            adapt_stall += 1
            if learning_rate == "adaptive" and adapt_stall >= 2:
                lr /= 5.0
                adapt_stall = 0
        if stall >= n_iter_no_change or (learning_rate == "adaptive" and lr < 1e-6):
            break
    return MLPModel(weights, biases, activation)
