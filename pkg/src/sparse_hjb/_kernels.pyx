# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled sweep kernels. Arithmetic mirrors _kernels_py exactly: sequential
# corner accumulation, strict-less argmin keeping the earliest candidate.

from cython.parallel cimport prange
from libc.math cimport INFINITY, fabs

import numpy as np

BACKEND_NAME = "compiled"


def sweep_jacobi(
    double[::1] v,
    double[:, ::1] stage,
    int[:, :, ::1] idx,
    double[:, :, ::1] w,
    double beta,
    extra,
    double[::1] out_v,
    int[::1] out_arg,
    int n_threads=1,
):
    """One Jacobi sweep against the frozen iterate v; returns the residual."""
    cdef Py_ssize_t n_nodes = stage.shape[0]
    cdef Py_ssize_t n_cand = stage.shape[1]
    cdef Py_ssize_t n_corners = idx.shape[2]
    cdef bint has_extra = extra is not None
    cdef double[::1] xstage
    cdef int[:, ::1] xidx
    cdef double[:, ::1] xw
    if has_extra:
        xstage, xidx, xw = extra
    else:
        xstage = np.zeros(1)
        xidx = np.zeros((1, 1), dtype=np.int32)
        xw = np.zeros((1, 1))

    cdef Py_ssize_t n, k, j
    cdef int barg
    cdef double acc, val, best, res
    cdef int nt = n_threads if n_threads > 0 else 1

    for n in prange(n_nodes, nogil=True, num_threads=nt, schedule="static"):
        best = INFINITY
        barg = 0
        for k in range(n_cand):
            acc = 0.0
            for j in range(n_corners):
                acc = acc + w[n, k, j] * v[idx[n, k, j]]
            val = stage[n, k] + beta * acc
            if val < best:
                best = val
                barg = <int> k
        if has_extra:
            acc = 0.0
            for j in range(n_corners):
                acc = acc + xw[n, j] * v[xidx[n, j]]
            val = xstage[n] + beta * acc
            if val < best:
                best = val
                barg = <int> n_cand
        out_v[n] = best
        out_arg[n] = barg

    res = 0.0
    for n in range(n_nodes):
        val = fabs(out_v[n] - v[n])
        if val > res:
            res = val
    return res


def sweep_gauss_seidel(
    double[::1] v,
    double[:, ::1] stage,
    int[:, :, ::1] idx,
    double[:, :, ::1] w,
    double beta,
    extra,
    int[::1] perm,
    int[::1] out_arg,
    int n_threads=1,
):
    """One in-place Gauss-Seidel sweep in perm order; returns the residual.

    Sequential by definition; n_threads is accepted for interface parity.
    """
    cdef Py_ssize_t n_cand = stage.shape[1]
    cdef Py_ssize_t n_corners = idx.shape[2]
    cdef Py_ssize_t n_visit = perm.shape[0]
    cdef bint has_extra = extra is not None
    cdef double[::1] xstage
    cdef int[:, ::1] xidx
    cdef double[:, ::1] xw
    if has_extra:
        xstage, xidx, xw = extra
    else:
        xstage = np.zeros(1)
        xidx = np.zeros((1, 1), dtype=np.int32)
        xw = np.zeros((1, 1))

    cdef Py_ssize_t t, n, k, j
    cdef int barg
    cdef double acc, val, best, change
    cdef double res = 0.0

    with nogil:
        for t in range(n_visit):
            n = perm[t]
            best = INFINITY
            barg = 0
            for k in range(n_cand):
                acc = 0.0
                for j in range(n_corners):
                    acc = acc + w[n, k, j] * v[idx[n, k, j]]
                val = stage[n, k] + beta * acc
                if val < best:
                    best = val
                    barg = <int> k
            if has_extra:
                acc = 0.0
                for j in range(n_corners):
                    acc = acc + xw[n, j] * v[xidx[n, j]]
                val = xstage[n] + beta * acc
                if val < best:
                    best = val
                    barg = <int> n_cand
            change = fabs(best - v[n])
            if change > res:
                res = change
            v[n] = best
            out_arg[n] = barg
    return res
