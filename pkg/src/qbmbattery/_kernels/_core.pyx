# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``_fallback`` exactly."""

import numpy as np

from libc.math cimport sqrt


def hermite_grid(double complex g0, double complex g1, double complex b00, double complex b01,
                 double complex b11, Py_ssize_t dim):
    """Renormalized coefficients ``G[m, n]`` of ``exp(z^T B z / 2 + g^T z)`` in ``z0^m z1^n / sqrt(m! n!)``."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    if dim <= 0:
        return out
    cdef double complex[:, ::1] G = out
    cdef Py_ssize_t m, n
    cdef double complex acc
    G[0, 0] = 1.0
    for n in range(dim - 1):
        acc = g1 * G[0, n]
        if n > 0:
            acc = acc + b11 * sqrt(<double>n) * G[0, n - 1]
        G[0, n + 1] = acc / sqrt(n + 1.0)
    for m in range(dim - 1):
        for n in range(dim):
            acc = g0 * G[m, n]
            if m > 0:
                acc = acc + b00 * sqrt(<double>m) * G[m - 1, n]
            if n > 0:
                acc = acc + b01 * sqrt(<double>n) * G[m, n - 1]
            G[m + 1, n] = acc / sqrt(m + 1.0)
    return out


def positive_runs(double[::1] diffs, double floor):
    """Maximal runs of positive increments, merged across single sub-floor dips.

    Returns ``(starts, ends, rises)`` as point indices into the sampled series
    and the summed positive increments of each run; runs with rise <= floor are
    dropped.
    """
    cdef Py_ssize_t n = diffs.shape[0]
    cdef Py_ssize_t i = 0, start, nruns = 0
    cdef double rise
    starts = np.empty(n, dtype=np.intp)
    ends = np.empty(n, dtype=np.intp)
    rises = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] s = starts
    cdef Py_ssize_t[::1] e = ends
    cdef double[::1] r = rises
    while i < n:
        if diffs[i] > 0.0:
            start = i
            rise = 0.0
            while i < n and diffs[i] > 0.0:
                rise += diffs[i]
                i += 1
            # merge with the previous run across one sub-floor dip
            if nruns > 0 and start == e[nruns - 1] + 1 and -diffs[start - 1] < floor:
                e[nruns - 1] = i
                r[nruns - 1] += rise
            else:
                s[nruns] = start
                e[nruns] = i
                r[nruns] = rise
                nruns += 1
        else:
            i += 1
    keep = rises[:nruns] > floor
    return starts[:nruns][keep], ends[:nruns][keep], rises[:nruns][keep]
