# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics must match ``_fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()


def matmul(const float[:, ::1] a, const float[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef Py_ssize_t i, j, p
    cdef double aip
    out = np.empty((m, n), dtype=np.float32)
    cdef float[:, ::1] o = out
    cdef double *acc = <double *> malloc(max(n, 1) * sizeof(double))
    if acc == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                for j in range(n):
                    acc[j] = 0.0
                # p ascending per output element: left-to-right accumulation
                for p in range(k):
                    aip = a[i, p]
                    for j in range(n):
                        acc[j] += aip * b[p, j]
                for j in range(n):
                    o[i, j] = <float> acc[j]
    finally:
        free(acc)
    return out


def softmax_rows(const float[:, ::1] m):
    cdef Py_ssize_t r = m.shape[0], c = m.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, s
    out = np.empty((r, c), dtype=np.float32)
    cdef float[:, ::1] o = out
    cdef double *e = <double *> malloc(max(c, 1) * sizeof(double))
    if e == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(r):
                mx = m[i, 0]
                for j in range(1, c):
                    if m[i, j] > mx:
                        mx = m[i, j]
                s = 0.0
                for j in range(c):
                    e[j] = exp(<double> m[i, j] - mx)
                    s += e[j]
                for j in range(c):
                    o[i, j] = <float> (e[j] / s)
    finally:
        free(e)
    return out


def cosine_rows(const float[:, ::1] a, const float[:, ::1] b):
    """Row-wise cosine similarity; 0 where either norm < 1e-12."""
    cdef Py_ssize_t r = a.shape[0], c = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double dot, na, nb, val
    out = np.empty(r, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(r):
            dot = 0.0
            na = 0.0
            nb = 0.0
            for j in range(c):
                dot += <double> a[i, j] * b[i, j]
                na += <double> a[i, j] * a[i, j]
                nb += <double> b[i, j] * b[i, j]
            if sqrt(na) < 1e-12 or sqrt(nb) < 1e-12:
                o[i] = 0.0
            else:
                # sqrt(fl(s*s)) == s, so identical rows give exactly 1
                val = dot / sqrt(na * nb)
                if val > 1.0:
                    val = 1.0
                elif val < -1.0:
                    val = -1.0
                o[i] = val
    return out
