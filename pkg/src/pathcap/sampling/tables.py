"""Constant-time categorical row samplers with lazy, cached materialization.

Rows with fewer than 8 support entries use a linear CDF scan; larger rows
use a Vose alias table.  Both consume exactly one uniform per draw, with
bit-identical semantics in the compiled and numpy kernels.

Concurrency: rows are built outside the lock and published at most once;
the packed arrays the kernels read are swapped as a single immutable
``PackedRows`` view (one attribute assignment), so concurrent samplers
never observe a torn mix of generations.  Slots are append-only, so any
view at least as new as a caller's ``ensure`` covers its rows.
"""

from __future__ import annotations

import threading
from typing import NamedTuple

import numpy as np

CDF_KIND = 0
ALIAS_KIND = 1
ALIAS_THRESHOLD = 8  # rows below this length scan a CDF instead


def build_alias(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias construction; deterministic stack order."""
    m = len(p)
    scaled = p * m
    prob = np.ones(m, dtype=np.float64)
    alias = np.arange(m, dtype=np.int32)
    small = [i for i in range(m) if scaled[i] < 1.0]
    large = [i for i in range(m) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    return prob, alias


class PackedRows(NamedTuple):
    """Immutable snapshot of the packed per-row sampler arrays."""

    n_rows: int
    kind: np.ndarray
    length: np.ndarray
    support: np.ndarray
    cum: np.ndarray
    prob: np.ndarray
    alias: np.ndarray


_EMPTY = PackedRows(
    0,
    np.zeros(0, dtype=np.int8),
    np.zeros(0, dtype=np.int64),
    np.zeros((0, 0), dtype=np.int64),
    np.zeros((0, 0), dtype=np.float64),
    np.zeros((0, 0), dtype=np.float64),
    np.zeros((0, 0), dtype=np.int64),
)


class LayerTable:
    """Packed per-row sampler arrays for one conditional layer.

    Rows are materialized on first use and published at most once; after
    ``ensure(targets, ...)`` returns, ``view`` covers every requested slot.
    """

    __slots__ = ("n_targets", "slot_of", "view", "_rows", "_lock")

    def __init__(self, n_targets: int):
        self.n_targets = n_targets
        self.slot_of = np.full(n_targets, -1, dtype=np.int64)
        self.view: PackedRows = _EMPTY
        self._rows: list[tuple[int, np.ndarray, np.ndarray]] = []
        self._lock = threading.Lock()

    def ensure(self, targets: np.ndarray, builder) -> None:
        """Materialize rows for the given target nodes if not yet cached."""
        missing = [int(t) for t in np.unique(targets) if self.slot_of[t] < 0]
        if missing:
            built = [(t, *builder(t)) for t in missing]  # build outside the lock
            with self._lock:
                for t, support, p in built:
                    if self.slot_of[t] >= 0:
                        continue  # another builder won the race; discard ours
                    self._rows.append((t, support, p))
                    self.slot_of[t] = len(self._rows) - 1
        if self.view.n_rows < len(self._rows):
            self._pack()

    def _pack(self) -> None:
        with self._lock:
            rows = list(self._rows)
        n = len(rows)
        if n == 0:
            return
        width = max(len(s) for _, s, _ in rows)
        kind = np.zeros(n, dtype=np.int8)
        length = np.zeros(n, dtype=np.int64)
        support = np.full((n, width), -1, dtype=np.int64)
        cum = np.full((n, width), np.inf, dtype=np.float64)
        prob = np.ones((n, width), dtype=np.float64)
        alias = np.zeros((n, width), dtype=np.int64)
        for slot, (_, sup, p) in enumerate(rows):
            m = len(sup)
            length[slot] = m
            support[slot, :m] = sup
            if m < ALIAS_THRESHOLD:
                kind[slot] = CDF_KIND
                cum[slot, :m] = np.cumsum(p)
            else:
                kind[slot] = ALIAS_KIND
                pr, al = build_alias(p)
                prob[slot, :m] = pr
                alias[slot, :m] = al
        new_view = PackedRows(n, kind, length, support, cum, prob, alias)
        with self._lock:
            if n > self.view.n_rows:  # a racing packer with more rows wins
                self.view = new_view

    @property
    def n_rows(self) -> int:
        return self.view.n_rows

    def row_probabilities(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """(support, probabilities) of a materialized row, for verification."""
        slot = int(self.slot_of[t])
        if slot < 0:
            raise KeyError(f"row {t} not materialized")
        _, sup, p = self._rows[slot]
        return sup, p
