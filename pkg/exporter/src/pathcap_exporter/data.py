"""Synthetic regime datasets: teacher-labeled isotropic Gaussians.

One fixed random teacher net labels a Gaussian cloud.  The three regimes
share this family and differ only in what makes them hard:

- easy:   the half of the pool with the largest teacher margins (clean,
          wide-margin labels; learnable, so held-out accuracy is high);
- medium: the plain pool with a fraction of labels resampled (the model
          must memorize the noisy part; held-out accuracy is moderate);
- random: the plain pool with the label column permuted once under a
          pinned seed (pure memorization; held-out accuracy is chance).

Isotropic inputs matter: positive homogeneous networks see only input
directions, and Gaussian directions are well spread, so memorization is
feasible without biases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import forward, init_layers

DATASET_NAME = "teacher-gaussian-v1"
REGIMES = ("easy", "medium", "random")


@dataclass(frozen=True)
class RegimeData:
    name: str
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def _teacher_labels(X: np.ndarray, teacher: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    out = forward(teacher, X)
    y = np.argmax(out, axis=1) + 1
    top2 = np.partition(out, -2, axis=1)
    margin = out[np.arange(len(y)), y - 1] - top2[:, -2]
    return y, margin


def make_regimes(
    d: int,
    k: int,
    n_train: int,
    n_test: int,
    seed: int,
    noise_fraction: float = 0.15,
    teacher_width: int = 64,
) -> dict[str, RegimeData]:
    """The three regime datasets, fully determined by the seed."""
    teacher = init_layers(np.random.default_rng(seed), [d, teacher_width, k])
    pool_rng = np.random.default_rng(seed + 1)
    pool = pool_rng.standard_normal((4 * (n_train + n_test), d))
    y_pool, margins = _teacher_labels(pool, teacher)

    # easy: widest-margin half of the pool, shuffled once
    top = np.argsort(-margins)[: 2 * (n_train + n_test)]
    shuffle = np.random.default_rng(seed + 2).permutation(len(top))
    Xe, ye = pool[top][shuffle], y_pool[top][shuffle]
    easy = RegimeData(
        "easy",
        Xe[:n_train], ye[:n_train],
        Xe[n_train : n_train + n_test], ye[n_train : n_train + n_test],
    )

    # medium: plain pool with a fraction of train labels resampled
    Xm = pool[: n_train + n_test]
    ym = y_pool[: n_train + n_test]
    noise_rng = np.random.default_rng(seed + 3)
    y_noisy = ym[:n_train].copy()
    flip = noise_rng.random(n_train) < noise_fraction
    y_noisy[flip] = noise_rng.integers(1, k + 1, size=int(flip.sum()))
    medium = RegimeData(
        "medium", Xm[:n_train], y_noisy, Xm[n_train:], ym[n_train:]
    )

    # random: same inputs as medium, train labels permuted once
    perm = np.random.default_rng(seed + 4).permutation(n_train)
    random_labels = RegimeData(
        "random", Xm[:n_train], ym[:n_train][perm], Xm[n_train:], ym[n_train:]
    )
    return {"easy": easy, "medium": medium, "random": random_labels}
