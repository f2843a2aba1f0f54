# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling step: one fused pass over the batch.

Mirrors _kernel_py.draw_step exactly; any semantic change must land in
both implementations.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

CDF_KIND = 0
ALIAS_KIND = 1


def draw_step(
    cnp.int8_t[::1] kind,
    cnp.int64_t[::1] length,
    cnp.int64_t[:, ::1] support,
    cnp.float64_t[:, ::1] cum,
    cnp.float64_t[:, ::1] prob,
    cnp.int64_t[:, ::1] alias,
    cnp.int64_t[::1] slots,
    cnp.float64_t[::1] u,
):
    cdef Py_ssize_t n = slots.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef cnp.int64_t sl, m, k
    cdef double uu, s, f
    for i in range(n):
        sl = slots[i]
        uu = u[i]
        m = length[sl]
        if kind[sl] == 0:  # CDF scan: first t with u < cum[t], clamped
            t = m - 1
            for j in range(m):
                if uu < cum[sl, j]:
                    t = j
                    break
            out[i] = support[sl, t]
        else:  # alias: slot from the integer part, accept on the fraction
            s = uu * <double> m
            k = <cnp.int64_t> s
            if k > m - 1:
                k = m - 1
            f = s - <double> k
            if f < prob[sl, k]:
                out[i] = support[sl, k]
            else:
                out[i] = support[sl, alias[sl, k]]
    return out_arr
