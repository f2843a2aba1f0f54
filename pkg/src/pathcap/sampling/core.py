"""Markov path sampling, empirical path distributions and sparse reconstruction.

Paths are sampled top-down through the conditional factorization of the
path distribution in O(L*M) amortized time.  Counts are tallied on the
sign-split (node-doubled) index space: a node's doubled identity is
(node, sign of its sampled outgoing edge), so the doubled-index empirical
Markov distribution is computable without materializing doubled matrices.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..logscaled import LogScaled
from ..measures import (
    DegenerateNetworkError,
    InputWeighting,
    PathChain,
    build_chain,
    input_weights,
)
from ..network import Activation, Dataset, Network
from . import backend
from .rng import RNG_ALGORITHM, stream_key, uniform_block
from .tables import LayerTable

__all__ = [
    "ConditionalSampler",
    "PathCounts",
    "EmpiricalMarkov",
    "ReconstructedNetwork",
    "build_sampler",
    "sample_paths",
    "empirical_markov",
    "reconstruct",
    "compression_stats",
]

_CHUNK = 1 << 16
_SIGN_FACTOR = np.array([1.0, -1.0])  # sign index 0 is '+', 1 is '-'


class ConditionalSampler:
    """Lazily materialized categorical samplers for the path distribution.

    The top distribution is p_{j_L} = a_L / V; the conditional row for
    target t at edge layer e is proportional to |W_{e+1}[t, :]| * a_e.
    Safe for concurrent sampling after construction.
    """

    def __init__(self, net: Network, S: Dataset, q: float):
        self.net = net
        self.w = input_weights(S, q)
        self.chain: PathChain = build_chain(net, self.w)
        if self.chain.degenerate:
            raise DegenerateNetworkError("cannot sample from a zero-variation network")
        self.V: LogScaled = self.chain.V
        self.q = float(q)
        L = net.depth
        self.dims = tuple(net.dims)
        # sign index of each weight: 0 for >= 0, 1 for < 0
        self.sign_idx = tuple((w < 0.0).astype(np.int8) for w in net.layers)
        self.top_table = LayerTable(1)
        self.tables = tuple(LayerTable(self.dims[e + 1]) for e in range(L))

    # -- row builders -------------------------------------------------
    def _top_row(self, _t: int) -> tuple[np.ndarray, np.ndarray]:
        aL = self.chain.a[self.net.depth]
        p = aL.relative()
        sup = np.nonzero(p > 0.0)[0].astype(np.int64)
        pr = p[sup]
        return sup, pr / pr.sum()

    def _row(self, e: int):
        def builder(t: int) -> tuple[np.ndarray, np.ndarray]:
            absrow = np.abs(self.net.layers[e][t])
            a = self.chain.a[e]
            mask = (absrow > 0.0) & (a.m > 0.0)
            sup = np.nonzero(mask)[0].astype(np.int64)
            if sup.size == 0:
                raise DegenerateNetworkError(
                    f"conditional row {t} at layer {e} has empty support"
                )
            es = a.e[sup]
            with np.errstate(under="ignore"):
                p = absrow[sup] * a.m[sup] * np.exp2((es - es.max()).astype(np.float64))
            return sup, p / p.sum()

        return builder

    # -- verification helpers -----------------------------------------
    def top_probabilities(self) -> np.ndarray:
        self.top_table.ensure(np.array([0]), self._top_row)
        sup, p = self.top_table.row_probabilities(0)
        out = np.zeros(self.dims[-1])
        out[sup] = p
        return out

    def conditional_probabilities(self, e: int) -> np.ndarray:
        """Dense p_{j_e | j_{e+1}} rows (zero rows for unreachable targets)."""
        out = np.zeros((self.dims[e + 1], self.dims[e]))
        reachable = np.nonzero(self.chain.a[e + 1].m > 0.0)[0]
        self.tables[e].ensure(reachable, self._row(e))
        for t in reachable:
            sup, p = self.tables[e].row_probabilities(int(t))
            out[t, sup] = p
        return out


def build_sampler(net: Network, S: Dataset, q: float) -> ConditionalSampler:
    return ConditionalSampler(net, S, q)


@dataclass(frozen=True)
class PathCounts:
    """Edge-pair counts from M multinomial path draws.

    ``pairs[e][s, sigma, t, tau]`` counts paths using edge (s -> t) at layer
    e, where sigma is the edge's own sign index and tau the sign index of
    the path's outgoing edge at t (0 at the top layer, which is untagged).
    """

    pairs: tuple[np.ndarray, ...]
    M: int
    dims: tuple[int, ...]
    seed: int
    workers: int
    activation: Activation
    rng_algorithm: str = RNG_ALGORITHM
    path_counts: dict[tuple[int, ...], int] | None = None

    @property
    def depth(self) -> int:
        return len(self.pairs)

    @property
    def top(self) -> np.ndarray:
        return self.pairs[-1].sum(axis=(0, 1, 3))

    def node_counts(self, v: int) -> np.ndarray:
        """Doubled node counts K_{(j_v, tau)} at hidden layer v, target side."""
        if not (1 <= v <= self.depth - 1):
            raise ValueError("hidden layer index out of range")
        return self.pairs[v - 1].sum(axis=(0, 1))

    def node_counts_source(self, v: int) -> np.ndarray:
        """Same counts tallied on the source side of edge v (flow check)."""
        if not (1 <= v <= self.depth - 1):
            raise ValueError("hidden layer index out of range")
        return self.pairs[v].sum(axis=(2, 3))

    def __add__(self, other: "PathCounts") -> "PathCounts":
        if self.dims != other.dims:
            raise ValueError("cannot merge counts over different architectures")
        merged_paths = None
        if self.path_counts is not None and other.path_counts is not None:
            merged_paths = dict(Counter(self.path_counts) + Counter(other.path_counts))
        return PathCounts(
            tuple(a + b for a, b in zip(self.pairs, other.pairs)),
            self.M + other.M,
            self.dims,
            self.seed,
            self.workers + other.workers,
            self.activation,
            self.rng_algorithm,
            merged_paths,
        )

    def csv_rows(self):
        """Sparse rows (layer, source, source_sign, target, target_sign, count)."""
        for e, arr in enumerate(self.pairs):
            for s, sg, t, tg in zip(*np.nonzero(arr)):
                yield (
                    e,
                    int(s),
                    "+" if sg == 0 else "-",
                    int(t),
                    "+" if tg == 0 else "-",
                    int(arr[s, sg, t, tg]),
                )


def sample_paths(
    cs: ConditionalSampler,
    M: int,
    seed: int,
    workers: int = 1,
    keep_paths: bool = False,
) -> PathCounts:
    """Draw M independent root-to-leaf paths; deterministic in (seed, workers).

    M is split near-evenly across ``workers`` independent streams; counts
    merge by addition, so a fixed partition plan reproduces bit-identical
    counts.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    L = cs.net.depth
    dims = cs.dims
    pairs = [np.zeros((dims[e], 2, dims[e + 1], 2), dtype=np.int64) for e in range(L)]
    kept: Counter | None = Counter() if keep_paths else None

    cs.top_table.ensure(np.array([0]), cs._top_row)
    sizes = [M // workers + (1 if w < M % workers else 0) for w in range(workers)]
    for w, m_w in enumerate(sizes):
        if m_w == 0:
            continue
        key = stream_key(seed, w)
        for lo in range(0, m_w, _CHUNK):
            hi = min(lo + _CHUNK, m_w)
            _sample_chunk(cs, key, lo, hi, pairs, kept)

    return PathCounts(
        tuple(pairs),
        M,
        dims,
        int(seed),
        workers,
        cs.net.activation,
        RNG_ALGORITHM,
        dict(kept) if kept is not None else None,
    )


def _sample_chunk(cs, key, lo, hi, pairs, kept) -> None:
    L = cs.net.depth
    dims = cs.dims
    m = hi - lo
    U = uniform_block(key, lo, hi, L + 1)
    nodes = np.empty((L + 1, m), dtype=np.int64)

    top = cs.top_table.view  # ensured before chunking starts
    nodes[L] = backend.draw_step(
        top.kind, top.length, top.support, top.cum, top.prob, top.alias,
        np.zeros(m, dtype=np.int64), np.ascontiguousarray(U[:, 0]),
    )
    for e in range(L - 1, -1, -1):
        targets = nodes[e + 1]
        tbl = cs.tables[e]
        tbl.ensure(targets, cs._row(e))
        view = tbl.view  # grabbed after ensure: covers every slot below
        slots = tbl.slot_of[targets]
        nodes[e] = backend.draw_step(
            view.kind, view.length, view.support, view.cum, view.prob, view.alias,
            slots, np.ascontiguousarray(U[:, L - e]),
        )

    for e in range(L):
        src, tgt = nodes[e], nodes[e + 1]
        sg = cs.sign_idx[e][tgt, src].astype(np.int64)
        if e < L - 1:
            tg = cs.sign_idx[e + 1][nodes[e + 2], tgt].astype(np.int64)
        else:
            tg = np.zeros(m, dtype=np.int64)
        flat = ((src * 2 + sg) * dims[e + 1] + tgt) * 2 + tg
        binc = np.bincount(flat, minlength=pairs[e].size)
        pairs[e] += binc.reshape(pairs[e].shape)

    if kept is not None:
        kept.update(map(tuple, nodes.T.tolist()))


@dataclass(frozen=True)
class EmpiricalMarkov:
    """The factored empirical path distribution (counts kept as integers).

    Top joint probabilities are counts/M; hidden conditionals are count
    ratios over sign-split indices with the 0/0 = 0 convention.  Floats are
    produced only at evaluation time, so "multiples of 1/M" stays exact.
    """

    counts: PathCounts

    @property
    def M(self) -> int:
        return self.counts.M

    @property
    def dims(self) -> tuple[int, ...]:
        return self.counts.dims

    @property
    def depth(self) -> int:
        return self.counts.depth

    @property
    def nnz(self) -> int:
        return int(sum(np.count_nonzero(arr) for arr in self.counts.pairs))

    def visited(self, v: int) -> np.ndarray:
        """Boolean (d_v, 2) mask of sign-split nodes seen at hidden layer v."""
        return self.counts.node_counts(v) > 0

    def visited_outputs(self) -> np.ndarray:
        return self.counts.top > 0

    def visited_per_layer(self) -> list[int]:
        L = self.depth
        out = [int(np.count_nonzero(self.counts.pairs[0].sum(axis=(1, 2, 3))))]
        out += [int(self.visited(v).sum()) for v in range(1, L)]
        out.append(int(np.count_nonzero(self.counts.top)))
        return out

    def top_joint(self) -> np.ndarray:
        """p~_{j_L, (j_{L-1}, sigma)} as floats, shape (d_{L-1}, 2, k)."""
        return self.counts.pairs[-1][:, :, :, 0].astype(np.float64) / self.M

    def conditional(self, e: int) -> np.ndarray:
        """p~_{(s,sigma)|(t,tau)} as floats, shape (d_e, 2, d_{e+1}, 2)."""
        if not (0 <= e <= self.depth - 2):
            raise ValueError("conditional layers are 0 .. L-2")
        cnt = self.counts.pairs[e].astype(np.float64)
        denom = self.counts.node_counts(e + 1).astype(np.float64)[None, None, :, :]
        return np.divide(cnt, denom, out=np.zeros_like(cnt), where=denom > 0)


def empirical_markov(counts: PathCounts) -> EmpiricalMarkov:
    return EmpiricalMarkov(counts)


class ReconstructedNetwork:
    """V * f(x'; p~): the sparse approximant with original edge signs folded in.

    Evaluates on x' = x / w0 (coordinates with w0 = 0 map to 0) and scales
    by the path variation V.  ``as_network`` emits the same function as a
    plain Network compacted to visited sign-split nodes.
    """

    def __init__(self, em: EmpiricalMarkov, V: LogScaled, w0: InputWeighting):
        if len(w0.w0) != em.dims[0]:
            raise ValueError("input weighting dimension does not match the counts")
        self.em = em
        self.V = V
        self.w0 = w0
        self.activation = em.counts.activation
        L = em.depth
        self._G = [
            em.conditional(e) * _SIGN_FACTOR[None, :, None, None] for e in range(L - 1)
        ]
        self._G_top = em.top_joint() * _SIGN_FACTOR[None, :, None]

    @property
    def nnz(self) -> int:
        return self.em.nnz

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Batch forward pass, (n, d) -> (n, k)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.em.dims[0]:
            raise ValueError("input dimension mismatch")
        w0 = self.w0.w0
        Xp = np.divide(X, w0[None, :], out=np.zeros_like(X), where=w0[None, :] > 0)
        phi = self.activation.apply
        O = np.repeat(Xp[:, :, None], 2, axis=2)
        for G in self._G:
            O = phi(np.einsum("nsa,satb->ntb", O, G))
        Y = np.einsum("nsa,sak->nk", O, self._G_top)
        return Y * self.V.to_float()

    def as_network(self) -> Network:
        """Compact signed Network over visited nodes; forward == evaluate.

        The x -> x/w0 change of variables is folded into the first layer
        and the scale V into the last.
        """
        em = self.em
        L = em.depth
        d = em.dims[0]
        vis = [em.visited(v).reshape(-1) for v in range(1, L)]  # flat (t*2+tau)
        layers = []
        W1 = self._G[0].sum(axis=1) if L > 1 else None  # (d0, d1, 2)
        W1 = np.transpose(W1, (1, 2, 0)).reshape(-1, d)[vis[0]]
        w0 = self.w0.w0
        W1 = np.divide(W1, w0[None, :], out=np.zeros_like(W1), where=w0[None, :] > 0)
        layers.append(W1)
        for v in range(2, L):
            Wv = np.transpose(self._G[v - 1], (2, 3, 0, 1)).reshape(
                2 * em.dims[v], 2 * em.dims[v - 1]
            )
            layers.append(Wv[vis[v - 1]][:, vis[v - 2]])
        WL = np.transpose(self._G_top, (2, 0, 1)).reshape(-1, 2 * em.dims[L - 1])
        layers.append(WL[:, vis[L - 2]] * self.V.to_float())
        return Network(tuple(layers), self.activation)


def reconstruct(em: EmpiricalMarkov, V: LogScaled, w0: InputWeighting) -> ReconstructedNetwork:
    return ReconstructedNetwork(em, V, w0)


def compression_stats(em: EmpiricalMarkov, M: int) -> dict:
    """Sparsity and precision report; nonzero parameters are at most L*M."""
    if M != em.M:
        raise ValueError("M does not match the empirical distribution")
    nnz = em.nnz
    bound = em.depth * M
    if nnz > bound:
        raise AssertionError(f"nonzero count {nnz} exceeds deterministic bound {bound}")
    return {
        "nnz": nnz,
        "nnz_bound": bound,
        "visited_per_layer": em.visited_per_layer(),
        "precision_digits": float(np.log10(M)),
    }
