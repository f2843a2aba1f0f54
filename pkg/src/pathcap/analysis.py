"""Margin machinery, generalization-bound evaluation and capacity comparisons."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .logscaled import LogScaled
from .measures import (
    DegenerateNetworkError,
    path_measures,
    path_norm_phi,
    product_abs,
    variation,
)
from .network import Dataset, Network, forward_batch
from .norms import group_norm_q1, induced_norm
from .sampling import (
    build_sampler,
    derive_seed,
    empirical_markov,
    reconstruct,
    sample_paths,
)

__all__ = [
    "margin",
    "margins_batch",
    "ramp",
    "losses",
    "LossSummary",
    "MarginStats",
    "normalized_margins",
    "BoundInputs",
    "generalization_bound",
    "CapacityReport",
    "competing_capacities",
    "SweepRow",
    "SweepResult",
    "sweep_accuracy_vs_M",
]

HISTOGRAM_BINS = 64


def margin(v: np.ndarray, y: int) -> float:
    """Margin operator: v[y] minus the largest other coordinate (y 0-based)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] < 2:
        raise ValueError("margins need at least two outputs")
    if not (0 <= y < v.shape[0]):
        raise ValueError("label out of range")
    rest = np.delete(v, y)
    return float(v[y] - rest.max())


def margins_batch(outputs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Row-wise margins; labels are 1-based as stored in datasets."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.shape[1] < 2:
        raise ValueError("margins need at least two outputs")
    idx = np.asarray(labels, dtype=np.int64) - 1
    n = outputs.shape[0]
    own = outputs[np.arange(n), idx]
    masked = outputs.copy()
    masked[np.arange(n), idx] = -np.inf
    return own - masked.max(axis=1)


def ramp(gamma: float, z) -> np.ndarray | float:
    """Piecewise-linear ramp: 0 below -gamma, 1 above 0, linear between."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z = np.asarray(z, dtype=np.float64)
    out = np.clip(1.0 + z / gamma, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LossSummary:
    loss: float          # empirical classification loss
    margin_loss: float   # gamma-margin loss
    ramp_mean: float     # mean of R_gamma(-margin), sandwiched between the two
    gamma: float


def losses(net: Network, S: Dataset, gamma: float) -> LossSummary:
    y = S.labels_checked(net.k)
    m = margins_batch(forward_batch(net, S), y)
    l_hat = float(np.mean(m <= 0.0))
    l_gamma = float(np.mean(m <= gamma))
    ramp_mean = float(np.mean(ramp(gamma, -m)))
    return LossSummary(l_hat, l_gamma, ramp_mean, gamma)


@dataclass(frozen=True)
class MarginStats:
    raw: np.ndarray
    normalized: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    v1: LogScaled

    def csv_rows(self):
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            yield float(lo), float(hi), int(c)


def normalized_margins(net: Network, S: Dataset) -> MarginStats:
    """Margins divided by the 1-path variation, with a fixed 64-bin histogram."""
    y = S.labels_checked(net.k)
    raw = margins_batch(forward_batch(net, S), y)
    v1 = variation(net, S, 1)
    if v1.is_zero:
        raise DegenerateNetworkError("zero path variation; margins cannot be normalized")
    # ldexp keeps the division meaningful even when V overflows float64
    normalized = np.ldexp(raw / v1.mantissa, -v1.exponent)
    lo, hi = float(normalized.min()), float(normalized.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(normalized, bins=HISTOGRAM_BINS, range=(lo, hi))
    return MarginStats(raw, normalized, edges, counts, v1)


@dataclass(frozen=True)
class BoundInputs:
    V: float
    zeta: float
    L: int
    d: int
    n: int
    k: int
    gamma: float
    delta: float
    margin_loss: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if min(self.V, self.zeta) < 0 or min(self.L, self.d, self.n, self.k) < 1:
            raise ValueError("invalid bound inputs")


def _smallest_pow2_at_least(t: float) -> int:
    """Smallest integer j >= 1 with 2**j >= t."""
    j = max(1, math.ceil(math.log2(t))) if t > 0 else 1
    while 2.0**j < t:
        j += 1
    while j > 1 and 2.0 ** (j - 1) >= t:
        j -= 1
    return j


def generalization_bound(b: BoundInputs, mode: str = "apriori") -> float:
    """High-probability generalization bound with explicit constants.

    ``apriori`` assumes the capacity class is fixed in advance; ``posthoc``
    instantiates the union-bound grid (powers of two in 1/gamma, integer
    ceilings of V and zeta) and charges the confidence split.  Values above
    1 are returned verbatim.
    """
    n, L, d = b.n, b.L, b.d
    width = math.sqrt(L + math.log(math.e * d))
    if mode == "apriori":
        cap = 48.0 * b.V * b.zeta * L * width * math.log(n) / (b.gamma * math.sqrt(n))
        conf = 3.0 * math.sqrt(math.log(2.0 / b.delta) / (2.0 * n))
        return b.margin_loss + 8.0 / n + cap + conf
    if mode == "posthoc":
        j1 = _smallest_pow2_at_least(math.sqrt(n) / b.gamma)
        j2 = max(1, math.ceil(b.V))
        j3 = max(1, math.ceil(b.zeta))
        cap = 48.0 * (2.0**j1) * j2 * j3 * L * width * math.log(n) / n
        conf = 3.0 * math.sqrt(
            (
                math.log(2.0 / b.delta)
                + j1 * math.log(2.0)
                + 2.0 * math.log(j2 + 1.0)
                + 2.0 * math.log(j3 + 1.0)
            )
            / (2.0 * n)
        )
        return b.margin_loss + 8.0 / n + cap + conf
    raise ValueError(f"unknown bound mode {mode!r}")


@dataclass(frozen=True)
class CapacityReport:
    """Capacity measures of one network, as (name, value, log10) entries."""

    entries: tuple[tuple[str, float, float], ...]

    def value(self, name: str) -> float:
        for n, v, _ in self.entries:
            if n == name:
                return v
        raise KeyError(name)

    def csv_rows(self):
        for name, value, log10 in self.entries:
            yield name, value, log10


def competing_capacities(net: Network, S: Dataset) -> CapacityReport:
    """The capacity comparison table: path measures against weight-norm products."""
    entries: list[tuple[str, float, float]] = []

    def add(name: str, value: float | LogScaled):
        if isinstance(value, LogScaled):
            entries.append((name, value.to_float(strict=False), value.log10))
        else:
            v = float(value)
            entries.append((name, v, math.log10(v) if v > 0 else -math.inf))

    pm1c = path_measures(net, S, 1, mode="collapsed")
    pm1d = path_measures(net, S, 1, mode="doubled")
    pm2c = path_measures(net, S, 2, mode="collapsed")
    pm2d = path_measures(net, S, 2, mode="doubled")
    add("V1", pm1c.V)
    add("V2", pm2c.V)
    add("zeta1_collapsed", pm1c.zeta)
    add("zeta1_doubled", pm1d.zeta)
    add("zeta2_collapsed", pm2c.zeta)
    add("zeta2_doubled", pm2d.zeta)
    phi1_vec, phi1 = path_norm_phi(net, 1, scaled=True)
    phi2_vec, phi2 = path_norm_phi(net, 2, scaled=True)
    add("phi1", phi1)
    add("phi2", phi2)

    prod_sigma = 1.0
    prod_fro = 1.0
    prod_1inf = 1.0
    rbar = 0.0
    for w in net.layers:
        sigma = induced_norm(w, 2)
        prod_sigma *= sigma
        prod_fro *= float(np.linalg.norm(w))
        prod_1inf *= induced_norm(w, math.inf)
        w21 = group_norm_q1(w, 2, transpose=True)
        rbar += (w21 / sigma) ** (2.0 / 3.0) if sigma > 0 else 0.0
    rbar /= net.depth
    add("prod_spectral", prod_sigma)
    add("prod_frobenius", prod_fro)
    add("prod_1inf", prod_1inf)
    P = product_abs(net, strict=False)
    add("abs_product_spectral", induced_norm(P, 2))
    add("abs_product_1inf", induced_norm(P, math.inf))
    add("spectral_width_term", rbar)
    ratio = 2.0 ** (pm2c.V.log2 - phi2.log2) if not phi2.is_zero else math.inf
    add("V2_over_phi2_diagnostic", ratio)
    return CapacityReport(tuple(entries))


@dataclass(frozen=True)
class SweepRow:
    M: int
    mean_acc: float
    min_acc: float
    max_acc: float
    mse: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    accuracies: tuple[np.ndarray, ...]  # per-round accuracy, one array per M

    def csv_rows(self):
        for r in self.rows:
            yield r.M, r.mean_acc, r.min_acc, r.max_acc, r.mse


def sweep_accuracy_vs_M(
    net: Network,
    S: Dataset,
    q: float,
    Ms,
    R: int,
    seed: int,
    threads: int = 1,
) -> SweepResult:
    """Reconstruction accuracy and MSE on S across sample counts M."""
    y = S.labels_checked(net.k)
    cs = build_sampler(net, S, q)
    exact = forward_batch(net, S)
    rows = []
    accs_all = []

    def one(args) -> tuple[float, float]:
        M, r = args
        counts = sample_paths(cs, M, derive_seed(seed, M, r))
        rec = reconstruct(empirical_markov(counts), cs.V, cs.w)
        out = rec.evaluate(S.X)
        acc = float(np.mean(np.argmax(out, axis=1) + 1 == y))
        mse = float(np.mean(np.sum((out - exact) ** 2, axis=1)))
        return acc, mse

    for M in Ms:
        tasks = [(int(M), r) for r in range(R)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, tasks))
        else:
            results = [one(t) for t in tasks]
        acc = np.array([a for a, _ in results])
        mse = float(np.mean([m for _, m in results]))
        rows.append(
            SweepRow(int(M), float(acc.mean()), float(acc.min()), float(acc.max()), mse)
        )
        accs_all.append(acc)
    return SweepResult(tuple(rows), tuple(accs_all))
