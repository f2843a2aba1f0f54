"""Pure-numpy sampling step: the fallback for the compiled kernel.

Must stay bit-identical to ``_stepkernel.pyx``: same uniforms in, same
comparisons, same clamping.  The CDF branch counts entries <= u against a
cumulative row padded with +inf; the alias branch splits one uniform into
slot and acceptance fraction.
"""

from __future__ import annotations

import numpy as np

from .tables import ALIAS_KIND, CDF_KIND


def draw_step(
    kind: np.ndarray,
    length: np.ndarray,
    support: np.ndarray,
    cum: np.ndarray,
    prob: np.ndarray,
    alias: np.ndarray,
    slots: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    out = np.empty(slots.shape[0], dtype=np.int64)
    kinds = kind[slots]

    cdf_mask = kinds == CDF_KIND
    if cdf_mask.any():
        sl = slots[cdf_mask]
        uu = u[cdf_mask]
        t = (uu[:, None] >= cum[sl]).sum(axis=1)
        t = np.minimum(t, length[sl] - 1)
        out[cdf_mask] = support[sl, t]

    alias_mask = kinds == ALIAS_KIND
    if alias_mask.any():
        sl = slots[alias_mask]
        uu = u[alias_mask]
        m = length[sl]
        s = uu * m.astype(np.float64)
        k = np.minimum(s.astype(np.int64), m - 1)
        f = s - k.astype(np.float64)
        keep = f < prob[sl, k]
        idx = np.where(keep, k, alias[sl, k])
        out[alias_mask] = support[sl, idx]

    return out
