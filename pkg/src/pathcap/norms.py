"""Matrix norms used by the variation bounds and capacity comparisons."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["induced_norm", "group_norm_q1", "PowerIterationError"]

_POWER_SEED = 0x9E3779B9
_POWER_TOL = 1e-10
_POWER_MAX_ITERS = 10_000


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the last residual."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"power iteration did not converge in {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


def induced_norm(A: np.ndarray, q) -> float:
    """Matrix norm induced by the vector q-norm, for q in {1, 2, inf}.

    q=1 is the max column abs-sum, q=inf the max row abs-sum, and q=2 the
    spectral norm via deterministic power iteration (tolerance 1e-10, at
    most 1e4 iterations).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    if q == 1:
        return float(np.abs(A).sum(axis=0).max())
    if q in (np.inf, math.inf, "inf"):
        return float(np.abs(A).sum(axis=1).max())
    if q == 2:
        return _spectral_norm(A)
    raise ValueError(f"induced q-norm implemented only for q in {{1, 2, inf}}, got {q}")


def _spectral_norm(A: np.ndarray) -> float:
    scale = float(np.abs(A).max())
    if scale == 0.0:
        return 0.0
    B = A / scale  # keeps the Gram iteration well inside float64 range
    G = B @ B.T if B.shape[0] <= B.shape[1] else B.T @ B
    n = G.shape[0]
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    residual = math.inf
    for it in range(_POWER_MAX_ITERS):
        w = G @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (G @ v_new))
        residual = float(np.linalg.norm(G @ v_new - lam_new * v_new))
        v = v_new
        if residual <= _POWER_TOL * max(lam_new, 1e-300):
            return scale * math.sqrt(lam_new)
        lam = lam_new
    raise PowerIterationError(residual, _POWER_MAX_ITERS)


def group_norm_q1(A: np.ndarray, q: float, transpose: bool = False) -> float:
    """Sum over rows of row q-norms; ``transpose=True`` sums column q-norms.

    Row orientation dominates the path variation for any output count;
    column orientation is the textbook (q,1) convention and is what
    ``variation_bounds`` reports.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    A = np.abs(np.asarray(A, dtype=np.float64))
    if transpose:
        A = A.T
    if math.isinf(q):
        return float(A.max(axis=1).sum()) if A.size else 0.0
    return float(np.sum(np.sum(A**q, axis=1) ** (1.0 / q)))
