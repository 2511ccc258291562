# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for candidate scoring and gradient accumulation.

Signatures mirror kgalign.kernels._numpy_impl exactly; the dispatcher in
kgalign.kernels picks whichever is importable.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def trilinear_forward(double[:, ::1] ent, double[:, ::1] rel,
                      long[::1] h, long[::1] r, long[::1] t):
    """score[i] = sum_j ent[h[i], j] * rel[r[i], j] * ent[t[i], j]"""
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t k = ent.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i, j
    cdef double acc
    cdef Py_ssize_t hi, ri, ti
    for i in range(n):
        hi = h[i]
        ri = r[i]
        ti = t[i]
        acc = 0.0
        for j in range(k):
            acc += ent[hi, j] * rel[ri, j] * ent[ti, j]
        out_v[i] = acc
    return out


def trilinear_backward(double[:, ::1] ent, double[:, ::1] rel,
                       long[::1] h, long[::1] r, long[::1] t,
                       double[::1] coeff,
                       double[:, ::1] grad_ent, double[:, ::1] grad_rel):
    """Scatter-add coeff-weighted trilinear gradients into grad_ent/grad_rel."""
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t k = ent.shape[1]
    cdef Py_ssize_t i, j
    cdef Py_ssize_t hi, ri, ti
    cdef double c, eh, wr, et
    for i in range(n):
        c = coeff[i]
        if c == 0.0:
            continue
        hi = h[i]
        ri = r[i]
        ti = t[i]
        for j in range(k):
            eh = ent[hi, j]
            wr = rel[ri, j]
            et = ent[ti, j]
            grad_ent[hi, j] += c * wr * et
            grad_ent[ti, j] += c * wr * eh
            grad_rel[ri, j] += c * eh * et
    return None


def rows_dot(double[:, ::1] a, long[::1] ia, double[:, ::1] b, long[::1] ib):
    """out[i] = a[ia[i]] . b[ib[i]]"""
    cdef Py_ssize_t n = ia.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i, j
    cdef Py_ssize_t ai, bi
    cdef double acc
    for i in range(n):
        ai = ia[i]
        bi = ib[i]
        acc = 0.0
        for j in range(d):
            acc += a[ai, j] * b[bi, j]
        out_v[i] = acc
    return out
