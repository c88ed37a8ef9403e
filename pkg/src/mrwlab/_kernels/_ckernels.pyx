# cython: language_level=3
# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops: sequential path stepping and ladder epoch scans.

Both backends consume the same pre-drawn uniform array and resolve it
through the same cumulative tables, so their outputs are bit-identical.
A draw maps to the number of cumulative entries less than or equal to it,
capped at the last slot.
"""

import numpy as np


def simulate_steps(double[:, ::1] cum_trans, long long[::1] inc_off,
                   double[::1] inc_cum, long long[::1] inc_val,
                   long long start, double[:, ::1] u):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = cum_trans.shape[0]
    states_arr = np.empty(n + 1, dtype=np.int64)
    incr_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] states = states_arr
    cdef long long[::1] incr = incr_arr
    cdef Py_ssize_t t
    cdef long long s = start
    cdef long long j, k, hi
    cdef double u0, u1
    states[0] = s
    with nogil:
        for t in range(n):
            u0 = u[t, 0]
            j = 0
            while j < m - 1 and cum_trans[s, j] <= u0:
                j += 1
            k = inc_off[s * m + j]
            hi = inc_off[s * m + j + 1]
            u1 = u[t, 1]
            while k < hi - 1 and inc_cum[k] <= u1:
                k += 1
            states[t + 1] = j
            incr[t] = inc_val[k]
            s = j
    return states_arr, incr_arr


def strict_ascending_epochs(long long[::1] sums):
    """Indices k with sums[k] above every earlier value; index 0 included."""
    cdef Py_ssize_t n = sums.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t k, count
    cdef long long best
    count = 1
    out[0] = 0
    best = sums[0]
    for k in range(1, n):
        if sums[k] > best:
            best = sums[k]
            out[count] = k
            count += 1
    return out_arr[:count].copy()


def weak_descending_epochs(long long[::1] sums):
    """Indices k with sums[k] at or below every earlier value; 0 included."""
    cdef Py_ssize_t n = sums.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t k, count
    cdef long long worst
    count = 1
    out[0] = 0
    worst = sums[0]
    for k in range(1, n):
        if sums[k] <= worst:
            worst = sums[k]
            out[count] = k
            count += 1
    return out_arr[:count].copy()
