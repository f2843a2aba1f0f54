"""Path variations, path complexities, marginals and path norms.

All deep products run through overflow-safe absolute matrix chains
(:mod:`pathcap.logscaled`); the brute-force path enumeration oracle lives
here too and is the reference implementation for every chain-based value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logscaled import (
    LogScaled,
    ScaledVector,
    scaled_matvec,
    scaled_from_matrix,
    scaled_matmat,
    scaled_power,
)
from .network import Dataset, Network
from .norms import group_norm_q1, induced_norm

__all__ = [
    "DegenerateNetworkError",
    "InputWeighting",
    "PathChain",
    "PathMeasures",
    "input_weights",
    "build_chain",
    "variation",
    "marginal",
    "renyi_half_exp",
    "path_complexity",
    "path_measures",
    "product_abs",
    "path_norm_phi",
    "variation_bounds",
    "enumerate_paths_oracle",
    "ORACLE_PATH_LIMIT",
]

ORACLE_PATH_LIMIT = 10**6


class DegenerateNetworkError(ValueError):
    """The total path variation is zero, so no path distribution exists."""


@dataclass(frozen=True)
class InputWeighting:
    """Per-coordinate input weights w_{j0} attached to an exponent q in [1, inf]."""

    q: float
    w0: np.ndarray

    def __post_init__(self):
        w0 = np.array(self.w0, dtype=np.float64)
        if np.any(w0 < 0.0) or not np.all(np.isfinite(w0)):
            raise ValueError("input weights must be finite and nonnegative")
        w0.setflags(write=False)
        object.__setattr__(self, "w0", w0)

    @classmethod
    def ones(cls, d: int, q: float = 1.0) -> "InputWeighting":
        return cls(q, np.ones(d))


def conjugate_exponent(q: float) -> float:
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


def input_weights(S: Dataset, q: float) -> InputWeighting:
    """Coordinate weights: max|x_j| for q=1, else the mean q*-power root."""
    if not (1.0 <= q):
        raise ValueError("q must lie in [1, inf]")
    absX = np.abs(S.X)
    if q == 1:
        w0 = absX.max(axis=0)
    else:
        qs = conjugate_exponent(q)
        w0 = np.mean(absX**qs, axis=0) ** (1.0 / qs)
    return InputWeighting(float(q), w0)


@dataclass(frozen=True)
class PathChain:
    """Prefix vectors a_0..a_L, suffix vectors b_L..b_0 and the total V.

    a_0 = w0, a_ell = |W_ell| a_{ell-1}; b_L = 1_k, b_ell = |W_{ell+1}|^T b_{ell+1}.
    Consistency: sum_j a_ell[j] b_ell[j] = V at every layer.
    """

    a: tuple[ScaledVector, ...]
    b: tuple[ScaledVector, ...]
    V: LogScaled
    degenerate: bool

    def layer_dot(self, ell: int) -> LogScaled:
        return self.a[ell].mul(self.b[ell]).total()


def build_chain(net: Network, w: InputWeighting) -> PathChain:
    if len(w.w0) != net.d:
        raise ValueError(f"weighting has dimension {len(w.w0)}, network input is {net.d}")
    a = [ScaledVector.from_array(w.w0)]
    for W in net.layers:
        a.append(a[-1].matvec(np.abs(W)))
    b = [None] * (net.depth + 1)
    b[net.depth] = ScaledVector.from_array(np.ones(net.k))
    for ell in range(net.depth - 1, -1, -1):
        b[ell] = b[ell + 1].matvec(np.abs(net.layers[ell]).T)
    V = a[-1].total()
    return PathChain(tuple(a), tuple(b), V, degenerate=V.is_zero)


def variation(net: Network, S: Dataset, q: float) -> LogScaled:
    """The q-path variation: input-weighted total absolute path weight."""
    return build_chain(net, input_weights(S, q)).V


def _collapsed_marginal(chain: PathChain, ell: int) -> np.ndarray:
    prod = chain.a[ell].mul(chain.b[ell])
    p = prod.relative()
    total = p.sum()
    if total <= 0.0:
        raise DegenerateNetworkError("zero path variation")
    return p / total


def _doubled_marginal(chain: PathChain, net: Network, ell: int) -> np.ndarray:
    """Mass through node j split by the sign of its sampled outgoing edge."""
    W = net.layers[ell]  # connects layer ell -> ell+1
    bm = chain.b[ell + 1]
    parts = []
    for mat in (np.maximum(W, 0.0), np.maximum(-W, 0.0)):
        t = scaled_matvec(mat.T, None, bm)
        parts.append(chain.a[ell].mul(t))
    p = _joint_relative(parts)
    total = p.sum()
    if total <= 0.0:
        raise DegenerateNetworkError("zero path variation")
    return p / total


def _joint_relative(parts: list[ScaledVector]) -> np.ndarray:
    """Concatenate scaled vectors rendered relative to their joint max entry."""
    ms = np.concatenate([p.m for p in parts])
    es = np.concatenate([p.e for p in parts])
    joined = ScaledVector(ms, es)
    return joined.relative()


def marginal(net: Network, w: InputWeighting, ell: int, mode: str = "collapsed") -> np.ndarray:
    """Layer marginal of the path distribution over original or sign-split units."""
    if not (1 <= ell <= net.depth - 1):
        raise ValueError(f"layer index must lie in [1, {net.depth - 1}]")
    chain = build_chain(net, w)
    if chain.degenerate:
        raise DegenerateNetworkError("zero path variation")
    if mode == "collapsed":
        return _collapsed_marginal(chain, ell)
    if mode == "doubled":
        return _doubled_marginal(chain, net, ell)
    raise ValueError(f"unknown marginal mode {mode!r}")


def renyi_half_exp(p: np.ndarray) -> float:
    """exp(H_{1/2}(p)/2) = sum_i sqrt(p_i), the effective square-root support."""
    p = np.asarray(p, dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValueError("marginal does not sum to 1")
    return float(np.sqrt(p).sum())


def path_complexity(net: Network, S: Dataset, q: float, mode: str = "doubled") -> float:
    """zeta_q: depth-averaged effective square-root width of the layer marginals."""
    w = input_weights(S, q)
    chain = build_chain(net, w)
    if chain.degenerate:
        raise DegenerateNetworkError("zero path variation")
    L = net.depth
    acc = 1.0
    for ell in range(1, L):
        if mode == "collapsed":
            p = _collapsed_marginal(chain, ell)
        elif mode == "doubled":
            p = _doubled_marginal(chain, net, ell)
        else:
            raise ValueError(f"unknown marginal mode {mode!r}")
        acc += renyi_half_exp(p)
    return acc / L


@dataclass(frozen=True)
class PathMeasures:
    """Bundle of V_q, zeta_q and the layer marginals for one (net, S, q, mode)."""

    q: float
    V: LogScaled
    zeta: float
    marginals: tuple[np.ndarray, ...]
    mode: str


def path_measures(net: Network, S: Dataset, q: float, mode: str = "doubled") -> PathMeasures:
    w = input_weights(S, q)
    chain = build_chain(net, w)
    if chain.degenerate:
        raise DegenerateNetworkError("zero path variation")
    margs = []
    acc = 1.0
    for ell in range(1, net.depth):
        p = (
            _collapsed_marginal(chain, ell)
            if mode == "collapsed"
            else _doubled_marginal(chain, net, ell)
        )
        margs.append(p)
        acc += renyi_half_exp(p)
    return PathMeasures(q, chain.V, acc / net.depth, tuple(margs), mode)


def product_abs(net: Network, strict: bool = True) -> np.ndarray:
    """|W_L| |W_{L-1}| ... |W_1| as a k x d matrix (scaled internally)."""
    Bm, Be = scaled_from_matrix(np.abs(net.layers[0]))
    for W in net.layers[1:]:
        Bm, Be = scaled_matmat(np.abs(W), Bm, Be)
    out = np.empty_like(Bm)
    for j in range(Bm.shape[1]):
        out[:, j] = ScaledVector(Bm[:, j], Be[:, j]).to_floats(strict=strict)
    return out


def path_norm_phi(net: Network, p: float, scaled: bool = False):
    """Path norm phi_p: per-output l_p norms of absolute path weights, and the total.

    Computed by chaining entrywise p-th-power absolute matrices; returns
    (per_output, total) as floats, or as LogScaled values when ``scaled``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    v = ScaledVector.from_array(np.ones(net.d))
    for W in net.layers:
        Am, Ae = scaled_from_matrix(np.abs(W))
        Am, Ae = scaled_power(Am, Ae, p)
        v = scaled_matvec(Am, Ae, v)
    per_output = [v.scalar(j).root(p) for j in range(net.k)]
    total_sv = ScaledVector(
        np.array([x.mantissa for x in per_output]),
        np.array([x.exponent for x in per_output]),
    )
    total = total_sv.total()
    if scaled:
        return per_output, total
    return (
        np.array([x.to_float() for x in per_output]),
        total.to_float(),
    )


def variation_bounds(net: Network, S: Dataset, q: float) -> tuple[float, float]:
    """Norm upper bounds on the q-path variation, q in {1, 2}.

    Returns (induced-norm bound, (q,1) group-norm bound); the group norm is
    taken in its definitional column orientation on the product matrix.
    """
    if q not in (1, 2):
        raise ValueError("variation bounds implemented for q in {1, 2}")
    qs = conjugate_exponent(q)
    P = product_abs(net)
    r = float(np.max(np.linalg.norm(S.X, ord=qs, axis=1))) if S.n else 0.0
    k = net.k
    b_induced = r * k ** (1.0 - 1.0 / qs) * induced_norm(P, math.inf if q == 1 else 2)
    b_group = r * group_norm_q1(P, q, transpose=True)
    return b_induced, b_group


@dataclass(frozen=True)
class OracleResult:
    """Exact path-space sums from brute-force enumeration."""

    V: float
    marginals: tuple[np.ndarray, ...]
    marginals_doubled: tuple[np.ndarray, ...]
    tensor: np.ndarray  # absolute path weights, axes (j_L, j_{L-1}, ..., j_0)
    dims: tuple[int, ...]

    def paths(self):
        """Yield (path, weight) over the support, path ordered (j_0, ..., j_L)."""
        it = np.nditer(self.tensor, flags=["multi_index"])
        for val in it:
            w = float(val)
            if w > 0.0:
                yield tuple(reversed(it.multi_index)), w

    def phi(self, p: float) -> tuple[np.ndarray, float]:
        axes = tuple(range(1, self.tensor.ndim))
        per_out = np.sum(self.tensor**p, axis=axes) ** (1.0 / p)
        return per_out, float(per_out.sum())


def enumerate_paths_oracle(net: Network, w: InputWeighting) -> OracleResult:
    """Brute-force reference: materializes every path weight w_{j0} * prod |w|.

    Refuses networks with more than 1e6 paths.
    """
    n_paths = net.n_paths()
    if n_paths > ORACLE_PATH_LIMIT:
        raise ValueError(f"path count {n_paths} exceeds oracle limit {ORACLE_PATH_LIMIT}")
    if len(w.w0) != net.d:
        raise ValueError("weighting dimension mismatch")
    T = np.asarray(w.w0, dtype=np.float64)  # axes grow as (j_ell, ..., j_0)
    for W in net.layers:
        absW = np.abs(W)
        T = absW.reshape(absW.shape + (1,) * (T.ndim - 1)) * T[None, ...]
    V = float(T.sum())
    L = net.depth
    collapsed = []
    doubled = []
    for ell in range(1, L):
        axis = L - ell
        keep = tuple(i for i in range(T.ndim) if i != axis)
        collapsed.append(T.sum(axis=keep) / V)
        # Joint over (j_{ell+1}, j_ell) splits node mass by outgoing-edge sign.
        keep2 = tuple(i for i in range(T.ndim) if i not in (axis - 1, axis))
        J = T.sum(axis=keep2)
        Wnext = net.layers[ell]
        plus = np.where(Wnext > 0.0, J, 0.0).sum(axis=0)
        minus = np.where(Wnext < 0.0, J, 0.0).sum(axis=0)
        doubled.append(np.concatenate([plus, minus]) / V)
    return OracleResult(V, tuple(collapsed), tuple(doubled), T, tuple(net.dims))
