"""Counter-based deterministic random streams for path sampling.

Algorithm "splitmix64-counter-v1": the SplitMix64 finalizer applied to
``key + (counter + 1) * GAMMA``, where the key is derived from (seed,
worker).  Draws are addressed by (worker, path, step), so results are
reproducible for a fixed (seed, partition plan) and independent of batch
chunking; worker results merge by addition.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "splitmix64-counter-v1"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def _finalize(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def stream_key(seed: int, worker: int) -> np.uint64:
    with np.errstate(over="ignore"):
        base = _finalize(np.asarray(_U64(seed & _MASK64) + _GAMMA))
        return _U64(_finalize(np.asarray(base + _U64(worker & _MASK64) * _STREAM_SALT)))


def uniform_block(key: np.uint64, path_lo: int, path_hi: int, steps: int) -> np.ndarray:
    """Uniforms in [0,1) for paths [lo, hi), shape (hi-lo, steps).

    Entry (i, s) depends only on (key, lo + i, s): chunk boundaries never
    change the draws.
    """
    idx = np.arange(path_lo, path_hi, dtype=np.uint64)
    counters = idx[:, None] * _U64(steps) + np.arange(steps, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        u64 = _finalize(key + (counters + _U64(1)) * _GAMMA)
    return (u64 >> _U64(11)).astype(np.float64) * 2.0**-53


def derive_seed(seed: int, *parts: int) -> int:
    """Fold extra identifiers (resample index, net index, ...) into a seed."""
    z = _U64(seed & _MASK64)
    for p in parts:
        with np.errstate(over="ignore"):
            z = _U64(_finalize(np.asarray(z + _U64(p & _MASK64) * _GAMMA + _STREAM_SALT)))
    return int(z)
