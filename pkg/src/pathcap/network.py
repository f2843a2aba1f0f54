"""Positive homogeneous feed-forward networks and their sign-split (node-doubled) form.

Networks are bias-free stacks of dense weight matrices with a positive
homogeneous activation (relu, leaky-relu or identity).  All arrays are
float64 and frozen after construction, so instances are safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Activation",
    "Network",
    "DoubledNetwork",
    "Dataset",
    "forward",
    "forward_batch",
    "sign_split",
    "doubled_forward",
]

ACTIVATION_KINDS = ("relu", "leaky-relu", "identity")


@dataclass(frozen=True)
class Activation:
    """A positive homogeneous, 1-Lipschitz activation with phi(0) = 0.

    ``alpha`` is the leaky-relu slope in (0, 1]; it is part of the model
    manifest (not a runtime flag) so capacity reports are reproducible
    from the artifact alone.
    """

    kind: str = "relu"
    alpha: float = 0.01

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unsupported activation kind {self.kind!r}")
        if self.kind == "leaky-relu" and not (0.0 < self.alpha <= 1.0):
            raise ValueError("leaky-relu slope must lie in (0, 1]")

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "leaky-relu":
            return np.where(z > 0.0, z, self.alpha * z)
        return z.copy()


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Network:
    """Bias-free feed-forward network ``x -> W_L phi(... phi(W_1 x))``.

    ``layers[i]`` has shape (d_{i+1}, d_i); at least two layers are required.
    """

    layers: tuple[np.ndarray, ...]
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        layers = tuple(_freeze(w) for w in self.layers)
        if len(layers) < 2:
            raise ValueError("a network needs at least two layers")
        for w in layers:
            if w.ndim != 2:
                raise ValueError("layer weights must be matrices")
            if not np.all(np.isfinite(w)):
                raise ValueError("layer weights must be finite")
        for lo, hi in zip(layers[:-1], layers[1:]):
            if hi.shape[1] != lo.shape[0]:
                raise ValueError(
                    f"adjacent layer shapes disagree: {lo.shape} -> {hi.shape}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].shape[1]] + [w.shape[0] for w in self.layers]

    @property
    def d(self) -> int:
        return self.layers[0].shape[1]

    @property
    def k(self) -> int:
        return self.layers[-1].shape[0]

    def n_paths(self) -> int:
        return math.prod(self.dims)

    def scaled(self, c: float) -> "Network":
        """Every layer multiplied by c (used by scale-invariance checks)."""
        return Network(tuple(c * w for w in self.layers), self.activation)


@dataclass(frozen=True)
class DoubledNetwork:
    """Sign-split form: nonnegative weights over node-doubled hidden layers.

    Doubled index (i, sigma) is laid out as ``i + sigma * d`` with sigma 0
    for the +phi copy and 1 for the -phi copy; layer 0 copies carry +x and
    -x.  The output layer is not doubled.
    """

    abs_layers: tuple[np.ndarray, ...]
    sign_tags: tuple[np.ndarray, ...]  # per-edge sign of the original weight
    dims: tuple[int, ...]
    activation: Activation

    def __post_init__(self):
        object.__setattr__(self, "abs_layers", tuple(_freeze(w) for w in self.abs_layers))


@dataclass(frozen=True)
class Dataset:
    """Input matrix X (n x d) with optional 1-based integer labels."""

    X: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        X = _freeze(np.atleast_2d(self.X))
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("dataset must contain at least one point and one feature")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.int64)
            if y.shape != (X.shape[0],):
                raise ValueError("label vector length must match the number of rows")
            if np.any(y < 1):
                raise ValueError("labels are 1-based and must be >= 1")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def labels_checked(self, k: int) -> np.ndarray:
        if self.y is None:
            raise ValueError("dataset carries no labels")
        if np.any(self.y > k):
            raise ValueError(f"labels exceed the number of outputs k={k}")
        return self.y


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Exact layer-by-layer evaluation of f(x; W); no bias terms."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.d,):
        raise ValueError(f"input must have length {net.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    return forward_batch(net, x[None, :])[0]


def forward_batch(net: Network, X: np.ndarray | Dataset) -> np.ndarray:
    """Row-wise forward pass; returns an (n, k) matrix."""
    if isinstance(X, Dataset):
        X = X.X
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != net.d:
        raise ValueError(f"inputs must have {net.d} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    h = X
    phi = net.activation.apply
    for w in net.layers[:-1]:
        h = phi(h @ w.T)
    return h @ net.layers[-1].T


def sign_split(net: Network) -> DoubledNetwork:
    """Rewrite ``net`` with nonnegative weights by doubling each hidden node.

    Column (i, sigma) of layer ell holds |W_ell[j, i]| when the original
    weight has sign sigma and 0 otherwise; sign(0) counts as + with a zero
    entry, so zero weights never create doubled edges.  Hidden rows come in
    identical (+, -) pairs; the output layer keeps its k rows.
    """
    abs_layers = []
    signs = []
    L = net.depth
    for ell, w in enumerate(net.layers):
        pos = np.maximum(w, 0.0)
        neg = np.maximum(-w, 0.0)
        half = np.concatenate([pos, neg], axis=1)  # columns: (+ block, - block)
        if ell < L - 1:
            abs_layers.append(np.concatenate([half, half], axis=0))
        else:
            abs_layers.append(half)
        signs.append(np.where(w < 0.0, -1, 1).astype(np.int8))
    dims = tuple([2 * net.d] + [2 * w.shape[0] for w in net.layers[:-1]] + [net.k])
    return DoubledNetwork(tuple(abs_layers), tuple(signs), dims, net.activation)


def doubled_forward(dn: DoubledNetwork, x: np.ndarray) -> np.ndarray:
    """Evaluate the sign-split form on input [x; -x]; equals the source forward."""
    x = np.asarray(x, dtype=np.float64)
    d = dn.dims[0] // 2
    if x.shape != (d,):
        raise ValueError(f"input must have length {d}, got shape {x.shape}")
    u = np.concatenate([x, -x])
    phi = dn.activation.apply
    for w in dn.abs_layers[:-1]:
        z = w @ u
        half = z.shape[0] // 2
        u = np.concatenate([phi(z[:half]), -phi(z[half:])])
    return dn.abs_layers[-1] @ u
