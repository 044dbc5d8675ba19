"""One-hidden-layer sigmoid perceptron trained by per-instance SGD with momentum."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from .knn import minmax_bounds, normalize


def hidden_units(n_features: int, n_classes: int = 2) -> int:
    return max(1, (n_features + n_classes) // 2)


def sigmoid(s):
    return 1.0 / (1.0 + np.exp(-np.clip(s, -500.0, 500.0)))


def forward(W1: np.ndarray, W2: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden and output activations; the last weight column is the bias."""
    h = sigmoid(W1[:, :-1] @ x + W1[:, -1])
    o = sigmoid(W2[:, :-1] @ h + W2[:, -1])
    return h, o


def loss_and_gradient(W1, W2, x, t):
    """Squared error ``0.5 * sum((o - t)**2)`` and its analytic weight gradients."""
    h, o = forward(W1, W2, x)
    delta_o = (o - t) * o * (1.0 - o)
    delta_h = h * (1.0 - h) * (W2[:, :-1].T @ delta_o)
    g2 = np.outer(delta_o, np.append(h, 1.0))
    g1 = np.outer(delta_h, np.append(x, 1.0))
    return 0.5 * float(((o - t) ** 2).sum()), g1, g2


def initial_weights(rng: np.random.Generator, n_in: int, n_hidden: int, n_out: int):
    W1 = rng.uniform(-0.5, 0.5, size=(n_hidden, n_in + 1))
    W2 = rng.uniform(-0.5, 0.5, size=(n_out, n_hidden + 1))
    return W1, W2


def epoch_order(rng: np.random.Generator, n: int, epochs: int) -> np.ndarray:
    if epochs == 0 or n == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)


@dataclass
class MlpModel:
    W1: np.ndarray
    W2: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X, y, *, hidden: int | None = None, learning_rate: float = 0.3,
            momentum: float = 0.2, epochs: int = 500, seed: int = 1, n_classes: int = 2) -> MlpModel:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        lo, hi = minmax_bounds(X)
        Xs = np.ascontiguousarray(normalize(X, lo, hi))
        T = np.ascontiguousarray(np.eye(n_classes)[y])
        n_hidden = hidden if hidden is not None else hidden_units(X.shape[1], n_classes)
        rng = np.random.default_rng(seed)
        W1, W2 = initial_weights(rng, X.shape[1], n_hidden, n_classes)
        order = epoch_order(rng, len(y), epochs)
        _kernels.mlp_train(Xs, T, W1, W2, order, learning_rate, momentum)
        return cls(W1, W2, lo, hi)

    def outputs(self, X: np.ndarray) -> np.ndarray:
        Xs = normalize(np.asarray(X, dtype=np.float64), self.lo, self.hi)
        H = sigmoid(Xs @ self.W1[:, :-1].T + self.W1[:, -1])
        return sigmoid(H @ self.W2[:, :-1].T + self.W2[:, -1])

    def distribution(self, X: np.ndarray) -> np.ndarray:
        o = self.outputs(X)
        total = o.sum(axis=1, keepdims=True)
        return o / np.where(total > 0, total, 1.0)

    def to_dict(self) -> dict:
        return {"W1": self.W1.tolist(), "W2": self.W2.tolist(), "lo": self.lo.tolist(),
                "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> MlpModel:
        return cls(*(np.asarray(d[k], dtype=np.float64) for k in ("W1", "W2", "lo", "hi")))
