# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; drop-in twins of ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def coincidence_mask(a, b, double offset, double half_window):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t na = av.shape[0], nb = bv.shape[0]
    cdef Py_ssize_t i, j = 0
    cdef double t
    out = np.zeros(na, dtype=np.uint8)
    cdef cnp.uint8_t[::1] ov = out
    for i in range(na):
        t = av[i]
        while j < nb and bv[j] - t - offset < -half_window:
            j += 1
        if j == nb:
            break
        if bv[j] - t - offset < half_window:
            ov[i] = 1
            j += 1
    return out.view(np.bool_)


def dead_time_filter(times, double dead_time):
    cdef const double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], i, k = 0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double last = 0.0, t
    for i in range(n):
        t = tv[i]
        if k == 0 or (t > last and t - last >= dead_time):
            ov[k] = t
            k += 1
            last = t
    return out[:k].copy()


def merge_gates(clicks, double latency, double width):
    cdef const double[::1] cv = np.ascontiguousarray(clicks, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0], i, k = 0
    opens = np.empty(n, dtype=np.float64)
    closes = np.empty(n, dtype=np.float64)
    cdef double[::1] o = opens
    cdef double[::1] c = closes
    cdef double lo, hi
    for i in range(n):
        lo = cv[i] + latency
        hi = lo + width
        if k > 0 and lo <= c[k - 1]:
            if hi > c[k - 1]:
                c[k - 1] = hi
        else:
            o[k] = lo
            c[k] = hi
            k += 1
    return opens[:k].copy(), closes[:k].copy()
