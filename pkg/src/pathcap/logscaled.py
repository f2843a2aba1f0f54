"""Base-2 scaled numbers for overflow-safe deep absolute-matrix products.

A value is stored as mantissa * 2**exponent with mantissa in [1, 2) (or an
exact 0).  Vectors use parallel (mantissa, exponent) arrays.  Plain float64
chains of |W_ell| products under/overflow around depth ~40 with typical
weights; this representation is stable to depth 1e3 and beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LogScaled",
    "ScaledVector",
    "scaled_matvec",
    "scaled_matmat",
    "scaled_from_matrix",
    "scaled_power",
]

# float64 can render exponents up to 1023; subnormals reach about -1074.
_MAX_RENDER_EXP = 1023
_MIN_RENDER_EXP = -1070


@dataclass(frozen=True)
class LogScaled:
    """Nonnegative scalar as mantissa * 2**exponent, mantissa in [1,2) or 0."""

    mantissa: float
    exponent: int

    def __post_init__(self):
        if self.mantissa != 0.0 and not (1.0 <= self.mantissa < 2.0):
            raise ValueError(f"mantissa {self.mantissa} outside [1,2)")
        if self.mantissa < 0.0:
            raise ValueError("LogScaled represents nonnegative values")

    @classmethod
    def zero(cls) -> "LogScaled":
        return cls(0.0, 0)

    @classmethod
    def from_float(cls, x: float) -> "LogScaled":
        if x < 0.0 or not math.isfinite(x):
            raise ValueError(f"cannot scale {x}")
        if x == 0.0:
            return cls.zero()
        m, e = math.frexp(x)  # m in [0.5, 1)
        return cls(m * 2.0, e - 1)

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def to_float(self, strict: bool = True) -> float:
        """Render to float64; raises OverflowError when strict and too large."""
        if self.is_zero:
            return 0.0
        if self.exponent > _MAX_RENDER_EXP:
            if strict:
                raise OverflowError(
                    f"value 2**{self.exponent} * {self.mantissa} exceeds float64 range"
                )
            return math.inf
        if self.exponent < _MIN_RENDER_EXP:
            return 0.0
        return math.ldexp(self.mantissa, self.exponent)

    @property
    def log2(self) -> float:
        if self.is_zero:
            return -math.inf
        return math.log2(self.mantissa) + self.exponent

    @property
    def ln(self) -> float:
        return self.log2 * math.log(2.0)

    @property
    def log10(self) -> float:
        return self.log2 * math.log10(2.0)

    def __mul__(self, other: "LogScaled") -> "LogScaled":
        if self.is_zero or other.is_zero:
            return LogScaled.zero()
        m = self.mantissa * other.mantissa  # in [1, 4)
        e = self.exponent + other.exponent
        if m >= 2.0:
            m /= 2.0
            e += 1
        return LogScaled(m, e)

    def root(self, p: float) -> "LogScaled":
        """p-th root, computed in log space."""
        if self.is_zero:
            return LogScaled.zero()
        lg = self.log2 / p
        e = math.floor(lg)
        return LogScaled(2.0 ** (lg - e), e)

    def ratio_to(self, other: "LogScaled") -> float:
        """self / other as a float; other must be nonzero."""
        if other.is_zero:
            raise ZeroDivisionError("ratio to a zero LogScaled")
        if self.is_zero:
            return 0.0
        return (self.mantissa / other.mantissa) * 2.0 ** (self.exponent - other.exponent)

    def __float__(self) -> float:
        return self.to_float(strict=True)

    def __eq__(self, other) -> bool:
        if isinstance(other, LogScaled):
            return self.mantissa == other.mantissa and (
                self.is_zero or self.exponent == other.exponent
            )
        return NotImplemented

    def _key(self):
        return (self.log2 if not self.is_zero else -math.inf)

    def __lt__(self, other: "LogScaled"):
        return self._key() < other._key()

    def __le__(self, other: "LogScaled"):
        return self._key() <= other._key()


class ScaledVector:
    """Nonnegative vector as parallel (mantissa, exponent) arrays.

    Zero entries are stored as (0.0, 0).  Used for the prefix/suffix vectors
    of path chains and for entrywise-powered matrix chains.
    """

    __slots__ = ("m", "e")

    def __init__(self, m: np.ndarray, e: np.ndarray):
        self.m = np.asarray(m, dtype=np.float64)
        self.e = np.asarray(e, dtype=np.int64)

    @classmethod
    def from_array(cls, x: np.ndarray) -> "ScaledVector":
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0.0) or not np.all(np.isfinite(x)):
            raise ValueError("ScaledVector entries must be finite and nonnegative")
        m, e = np.frexp(x)
        nz = x > 0.0
        m = np.where(nz, m * 2.0, 0.0)
        e = np.where(nz, e - 1, 0).astype(np.int64)
        return cls(m, e)

    def __len__(self) -> int:
        return self.m.shape[0]

    def matvec(self, A: np.ndarray) -> "ScaledVector":
        """A @ self for a nonnegative plain matrix A, row-wise renormalized."""
        return scaled_matvec(A, None, self)

    def mul(self, other: "ScaledVector") -> "ScaledVector":
        m = self.m * other.m
        e = self.e + other.e
        big = m >= 2.0
        m = np.where(big, m / 2.0, m)
        e = np.where(big, e + 1, e)
        return ScaledVector(np.where(m > 0.0, m, 0.0), np.where(m > 0.0, e, 0))

    def total(self) -> LogScaled:
        """Sum of entries as a LogScaled scalar."""
        nz = self.m > 0.0
        if not np.any(nz):
            return LogScaled.zero()
        emax = int(self.e[nz].max())
        s = float(np.sum(self.m[nz] * np.exp2((self.e[nz] - emax).astype(np.float64))))
        out = LogScaled.from_float(s)
        return LogScaled(out.mantissa, out.exponent + emax)

    def relative(self) -> np.ndarray:
        """Entries rescaled by a common power of two so the largest is in [1, 2).

        Ratios between entries are preserved exactly, which is all the
        marginal and row-probability computations need.
        """
        nz = self.m > 0.0
        if not np.any(nz):
            return np.zeros_like(self.m)
        emax = int(self.e[nz].max())
        out = np.zeros_like(self.m)
        out[nz] = self.m[nz] * np.exp2((self.e[nz] - emax).astype(np.float64))
        return out

    def to_floats(self, strict: bool = True) -> np.ndarray:
        if np.any(self.e > _MAX_RENDER_EXP):
            if strict:
                raise OverflowError("scaled vector entry exceeds float64 range")
        with np.errstate(over="ignore", under="ignore"):
            return np.ldexp(self.m, np.clip(self.e, _MIN_RENDER_EXP, _MAX_RENDER_EXP + 1))

    def scalar(self, i: int) -> LogScaled:
        if self.m[i] == 0.0:
            return LogScaled.zero()
        return LogScaled(float(self.m[i]), int(self.e[i]))


def scaled_matvec(
    Am: np.ndarray, Ae: np.ndarray | None, v: ScaledVector
) -> ScaledVector:
    """(Am * 2**Ae) @ (vm * 2**ve) with per-row exponent renormalization.

    Ae may be None for a plain nonnegative matrix.  Cost is O(rows*cols);
    each output row is summed relative to its own max exponent, so entries
    spanning wildly different magnitudes stay accurate.
    """
    Am = np.asarray(Am, dtype=np.float64)
    T = Am * v.m[None, :]
    E = v.e[None, :] if Ae is None else (np.asarray(Ae, dtype=np.int64) + v.e[None, :])
    active = T > 0.0
    any_active = active.any(axis=1)
    # Row-wise max exponent over active terms; inactive rows renormalize to 0.
    E_masked = np.where(active, E, np.iinfo(np.int64).min)
    Erow = E_masked.max(axis=1)
    Erow = np.where(any_active, Erow, 0)
    with np.errstate(under="ignore"):
        scale = np.exp2(np.where(active, E - Erow[:, None], 0.0).astype(np.float64))
    S = np.sum(np.where(active, T * scale, 0.0), axis=1)
    m, e = np.frexp(S)
    nz = S > 0.0
    m = np.where(nz, m * 2.0, 0.0)
    e = np.where(nz, e - 1 + Erow, 0).astype(np.int64)
    return ScaledVector(m, e)


def scaled_matmat(A: np.ndarray, Bm: np.ndarray, Be: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A @ B for plain nonnegative A and scaled B, column by column."""
    cols = [
        scaled_matvec(A, None, ScaledVector(Bm[:, j], Be[:, j]))
        for j in range(Bm.shape[1])
    ]
    m = np.stack([c.m for c in cols], axis=1)
    e = np.stack([c.e for c in cols], axis=1)
    return m, e


def scaled_from_matrix(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise (mantissa, exponent) decomposition of a nonnegative matrix."""
    A = np.asarray(A, dtype=np.float64)
    m, e = np.frexp(A)
    nz = A > 0.0
    return np.where(nz, m * 2.0, 0.0), np.where(nz, e - 1, 0).astype(np.int64)


def scaled_power(Am: np.ndarray, Ae: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise p-th power of a scaled matrix, exponent-safe for large p."""
    nz = Am > 0.0
    lg = np.where(nz, np.log2(np.where(nz, Am, 1.0)) + Ae.astype(np.float64), 0.0) * p
    e = np.floor(lg)
    m = np.where(nz, np.exp2(lg - e), 0.0)
    return m, np.where(nz, e, 0).astype(np.int64)
