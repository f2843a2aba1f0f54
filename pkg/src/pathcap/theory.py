"""Empirical verification of the sampling-error, cardinality and covering bounds.

Monte-Carlo checks use one-sided 3-standard-error slack: the approximation
bound is an expectation bound, so finite-resample noise must not produce
false failures.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measures import (
    enumerate_paths_oracle,
    input_weights,
    path_measures,
)
from .network import Dataset, Network, forward_batch
from .sampling import (
    build_sampler,
    derive_seed,
    empirical_markov,
    reconstruct,
    sample_paths,
)
from .sampling.core import PathCounts

__all__ = [
    "MCEstimate",
    "mc_error",
    "sampling_error_bound",
    "LowerBoundInstance",
    "lower_bound_instance",
    "lower_bound_rhs",
    "MarkovCandidate",
    "log_likelihood",
    "random_markov_candidate",
    "count_realized",
    "cardinality_log_bound",
    "covering_size",
    "partition_count",
    "iter_partitions",
    "effective_projection",
    "random_network",
    "random_dataset",
    "probe_inputs",
]

COUNT_REALIZED_PATH_LIMIT = 10**4
COUNT_REALIZED_SAMPLE_LIMIT = 10**6
_PROBE_SEED = 0x50524F42


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std: float
    resamples: int
    ci95: tuple[float, float]

    @property
    def se(self) -> float:
        return self.std / math.sqrt(self.resamples)


def mc_error(
    net: Network,
    S: Dataset,
    q: float,
    M: int,
    R: int,
    seed: int,
    threads: int = 1,
) -> MCEstimate:
    """Mean squared reconstruction error over R independent sampling rounds.

    Each round draws M paths, forms the empirical Markov distribution and
    measures (1/n) sum_x ||f(x; W~) - f(x; W)||_2^2 on S.
    """
    if R < 2:
        raise ValueError("need at least two resamples")
    cs = build_sampler(net, S, q)
    exact = forward_batch(net, S)

    def one(r: int) -> float:
        counts = sample_paths(cs, M, derive_seed(seed, r))
        rec = reconstruct(empirical_markov(counts), cs.V, cs.w)
        diff = rec.evaluate(S.X) - exact
        return float(np.mean(np.sum(diff * diff, axis=1)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errs = np.fromiter(pool.map(one, range(R)), dtype=np.float64, count=R)
    else:
        errs = np.fromiter(map(one, range(R)), dtype=np.float64, count=R)
    mean = float(errs.mean())
    std = float(errs.std(ddof=1))
    half = 1.96 * std / math.sqrt(R)
    return MCEstimate(mean, std, R, (mean - half, mean + half))


def sampling_error_bound(V: float, zeta: float, L: int, M: int) -> float:
    """The squared sampling-error bound (V * zeta * L / sqrt(M))**2."""
    if min(zeta, L, M) <= 0 or V < 0:
        raise ValueError("arguments must be positive (V may be zero)")
    return (V * zeta * L) ** 2 / M


@dataclass(frozen=True)
class LowerBoundInstance:
    """All-ones two-layer net with a balanced +-1 input: f(x; p) = 0 exactly."""

    net: Network
    x: np.ndarray
    xi1: float

    @property
    def dataset(self) -> Dataset:
        return Dataset(self.x[None, :])


def lower_bound_instance(d: int, d1: int) -> LowerBoundInstance:
    if d < 2 or d % 2 != 0:
        raise ValueError("d must be even and >= 2")
    if d1 < 1:
        raise ValueError("d1 must be >= 1")
    net = Network((np.ones((d1, d)), np.ones((1, d1))))
    x = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    S = Dataset(x[None, :])
    pm = path_measures(net, S, q=1, mode="collapsed")
    xi1 = 0.5 * (1.0 + float(np.sqrt(pm.marginals[0]).sum()))
    return LowerBoundInstance(net, x, xi1)


def lower_bound_rhs(xi1: float, M: int) -> float:
    if M < 1:
        raise ValueError("M must be >= 1")
    if xi1 < 0.5:
        raise ValueError("xi1 is at least 1/2 by definition")
    return xi1 * xi1 / (32.0 * M)


@dataclass(frozen=True)
class MarkovCandidate:
    """A factored path distribution: top marginal and per-layer conditionals.

    ``conds[e][t, s]`` is p(j_e = s | j_{e+1} = t) over collapsed indices.
    """

    top: np.ndarray
    conds: tuple[np.ndarray, ...]

    def log_prob(self, path: tuple[int, ...]) -> float:
        p = self.top[path[-1]]
        if p <= 0.0:
            return -math.inf
        lp = math.log(p)
        for e in range(len(path) - 2, -1, -1):
            c = self.conds[e][path[e + 1], path[e]]
            if c <= 0.0:
                return -math.inf
            lp += math.log(c)
        return lp

    @classmethod
    def from_counts(cls, counts: PathCounts) -> "MarkovCandidate":
        top = counts.top.astype(np.float64) / counts.M
        conds = []
        for e in range(counts.depth):
            pair = counts.pairs[e].sum(axis=(1, 3)).astype(np.float64)  # (d_e, d_{e+1})
            K = pair.sum(axis=0)
            cond = np.divide(pair, K[None, :], out=np.zeros_like(pair), where=K > 0).T
            conds.append(cond)
        return cls(top, tuple(conds))


def log_likelihood(counts: PathCounts, markov: MarkovCandidate) -> float:
    """Log multinomial likelihood of the observed path counts under ``markov``.

    Requires counts sampled with keep_paths=True.  A candidate assigning
    zero mass to any observed path yields -inf.
    """
    if counts.path_counts is None:
        raise ValueError("path-level counts were not kept; sample with keep_paths=True")
    if abs(float(markov.top.sum()) - 1.0) > 1e-6:
        raise ValueError("candidate top marginal does not sum to 1")
    total = math.lgamma(counts.M + 1)
    for path, k in counts.path_counts.items():
        lp = markov.log_prob(path)
        if lp == -math.inf:
            return -math.inf
        total += k * lp - math.lgamma(k + 1)
    return total


def random_markov_candidate(
    counts: PathCounts, rng: np.random.Generator
) -> MarkovCandidate:
    """Dirichlet(1) perturbation on the support of p~ plus one random extra edge per row."""
    base = MarkovCandidate.from_counts(counts)
    dims = counts.dims

    def perturb(row: np.ndarray, width: int) -> np.ndarray:
        sup = list(np.nonzero(row > 0)[0])
        if not sup:
            return row
        extras = [j for j in range(width) if j not in sup]
        if extras:
            sup.append(int(rng.choice(extras)))
        out = np.zeros(width)
        out[sup] = rng.dirichlet(np.ones(len(sup)))
        return out

    top = perturb(base.top, dims[-1])
    conds = []
    for e, cond in enumerate(base.conds):
        new = np.zeros_like(cond)
        for t in range(cond.shape[0]):
            if cond[t].sum() > 0:
                new[t] = perturb(cond[t], dims[e])
        conds.append(new)
    return MarkovCandidate(top, tuple(conds))


def probe_inputs(d: int, n: int = 16, seed: int = _PROBE_SEED) -> np.ndarray:
    """Fixed unit-sphere probes used for function fingerprinting."""
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, d))
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def count_realized(
    net: Network,
    S: Dataset,
    q: float,
    M: int,
    probes: np.ndarray | None = None,
) -> int:
    """Exhaustively count distinct reconstructed functions over all count vectors.

    Enumerates every multinomial outcome K with sum K = M over the support
    paths, reconstructs each and deduplicates by probe-evaluation
    fingerprints rounded at 1e-9.
    """
    if probes is None:
        probes = probe_inputs(net.d)
    if probes.shape[0] < 16:
        raise ValueError("need at least 16 probe inputs")
    w = input_weights(S, q)
    oracle = enumerate_paths_oracle(net, w)
    support = [p for p, _ in oracle.paths()]
    P = len(support)
    if P > COUNT_REALIZED_PATH_LIMIT:
        raise ValueError(f"path count {P} exceeds enumeration guard")
    n_outcomes = math.comb(P + M - 1, M)
    if n_outcomes > COUNT_REALIZED_SAMPLE_LIMIT:
        raise ValueError(f"{n_outcomes} count vectors exceed enumeration guard")
    cs = build_sampler(net, S, q)
    L = net.depth
    dims = net.dims
    sign_idx = cs.sign_idx
    seen = set()
    for K in _compositions(M, P):
        pairs = [np.zeros((dims[e], 2, dims[e + 1], 2), dtype=np.int64) for e in range(L)]
        for path, k in zip(support, K):
            if k == 0:
                continue
            for e in range(L):
                s, t = path[e], path[e + 1]
                sg = int(sign_idx[e][t, s])
                tg = int(sign_idx[e + 1][path[e + 2], t]) if e < L - 1 else 0
                pairs[e][s, sg, t, tg] += k
        counts = PathCounts(tuple(pairs), M, tuple(dims), 0, 1, net.activation)
        rec = reconstruct(empirical_markov(counts), cs.V, cs.w)
        fp = np.round(rec.evaluate(probes), 9)
        seen.add(fp.tobytes())
    return len(seen)


def cardinality_log_bound(M: int, L: int, d: int) -> float:
    """Log of the representer-set cardinality bound: M (ln(d e) + L ln 8)."""
    if min(M, L, d) < 1:
        raise ValueError("arguments must be positive integers")
    return M * (math.log(d * math.e) + L * math.log(8.0))


def covering_size(
    V: float, zeta: float, L: int, gamma: float, eps: float, d: int
) -> tuple[int, float, float]:
    """(M_eps, log covering number, closed-form metric entropy bound).

    M_eps = ceil((2 V zeta L / (gamma eps))^2); the closed form is
    9 V^2 zeta^2 L^2 (L + ln(d e)) / (gamma^2 eps^2).
    """
    if min(V, zeta, L, gamma, eps, d) <= 0:
        raise ValueError("arguments must be positive")
    M_eps = math.ceil((2.0 * V * zeta * L / (gamma * eps)) ** 2)
    log_N = cardinality_log_bound(M_eps, L, d)
    closed = 9.0 * V**2 * zeta**2 * L**2 * (L + math.log(d * math.e)) / (gamma * eps) ** 2
    return M_eps, log_N, closed


def partition_count(k: int) -> int:
    """Number of integer partitions of k (exact, via the standard DP)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    table = [1] + [0] * k
    for part in range(1, k + 1):
        for total in range(part, k + 1):
            table[total] += table[total - part]
    return table[k]


def iter_partitions(k: int, max_part: int | None = None):
    """Yield all partitions of k in nonincreasing order (exhaustive oracle)."""
    if k == 0:
        yield ()
        return
    if max_part is None or max_part > k:
        max_part = k
    for first in range(max_part, 0, -1):
        for rest in iter_partitions(k - first, first):
            yield (first,) + rest


@dataclass(frozen=True)
class ProjectionResult:
    network: Network
    rank: int


def effective_projection(net: Network, S: Dataset) -> ProjectionResult:
    """Project first-layer rows onto span(S); forward values on S are unchanged."""
    X = S.X
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    tol = max(X.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    Q = vt[:rank]
    proj = Q.T @ Q
    W1p = net.layers[0] @ proj
    return ProjectionResult(Network((W1p,) + net.layers[1:], net.activation), rank)


# ----------------------------------------------------------------------
# Random instances shared by the verification suites and tests
# ----------------------------------------------------------------------


def random_network(
    rng: np.random.Generator,
    L: int | None = None,
    max_width: int = 16,
    k: int | None = None,
    d: int | None = None,
) -> Network:
    if L is None:
        L = int(rng.integers(2, 5))
    d = int(rng.integers(2, max_width + 1)) if d is None else d
    k = int(rng.integers(2, min(max_width, 4) + 1)) if k is None else k
    dims = [d] + [int(rng.integers(2, max_width + 1)) for _ in range(L - 1)] + [k]
    layers = tuple(
        rng.standard_normal((dims[i + 1], dims[i])) for i in range(L)
    )
    return Network(layers)


def random_dataset(
    rng: np.random.Generator, n: int, d: int, k: int | None = None
) -> Dataset:
    X = rng.standard_normal((n, d))
    y = rng.integers(1, k + 1, size=n) if k else None
    return Dataset(X, y)
