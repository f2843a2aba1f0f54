"""Minimal bias-free MLP training: SGD with momentum 0.9, no regularization.

Leaky-ReLU is used throughout: it sits inside the positive homogeneous
class the downstream toolkit accepts, and bias-free plain-ReLU nets are
prone to irreversible dead-unit collapse at practical learning rates.
All randomness flows through explicit numpy generators, so identical seeds
give identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAKY_ALPHA = 0.1
MOMENTUM = 0.9


def act(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, LEAKY_ALPHA * z)


def act_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, 1.0, LEAKY_ALPHA)


def init_layers(rng: np.random.Generator, dims: list[int]) -> list[np.ndarray]:
    return [
        rng.standard_normal((dims[i + 1], dims[i])) * np.sqrt(2.0 / dims[i])
        for i in range(len(dims) - 1)
    ]


def forward(layers: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    h = X
    for W in layers[:-1]:
        h = act(h @ W.T)
    return h @ layers[-1].T


def accuracy(layers: list[np.ndarray], X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(forward(layers, X), axis=1) + 1 == y))


@dataclass
class TrainResult:
    layers: list[np.ndarray]
    epochs_run: int
    train_accuracy: float
    converged: bool          # reached 100% before the epoch cap
    final_lr: float


def train(
    layers: list[np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    lr: float,
    epochs: int,
    batch_size: int,
    seed: int,
    patience: int = 60,
) -> TrainResult:
    """Softmax cross-entropy SGD until 100% train accuracy or the epoch cap.

    The learning rate halves after ``patience`` epochs without improvement.
    """
    rng = np.random.default_rng(seed)
    n, k = X.shape[0], layers[-1].shape[0]
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y - 1] = 1.0
    vel = [np.zeros_like(W) for W in layers]
    best, since = 0.0, 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            hs, zs = [X[idx]], []
            for W in layers[:-1]:
                z = hs[-1] @ W.T
                zs.append(z)
                hs.append(act(z))
            out = hs[-1] @ layers[-1].T
            shifted = np.exp(out - out.max(axis=1, keepdims=True))
            p = shifted / shifted.sum(axis=1, keepdims=True)
            dZ = (p - onehot[idx]) / len(idx)
            for l in range(len(layers) - 1, -1, -1):
                grad = dZ.T @ hs[l]
                if l > 0:
                    dZ = (dZ @ layers[l]) * act_grad(zs[l - 1])
                vel[l] = MOMENTUM * vel[l] - lr * grad
                layers[l] += vel[l]
        acc = accuracy(layers, X, y)
        if acc == 1.0:
            return TrainResult(layers, epoch + 1, acc, True, lr)
        if acc > best + 1e-4:
            best, since = acc, 0
        else:
            since += 1
            if since >= patience:
                lr *= 0.5
                since = 0
    return TrainResult(layers, epochs, acc, False, lr)
