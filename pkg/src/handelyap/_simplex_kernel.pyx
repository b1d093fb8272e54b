# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tableau kernels. Mirrors _simplex_py exactly."""

from libc.math cimport fabs
from libc.stdlib cimport malloc, free

cdef double DROP_TOL = 1e-13


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    cdef Py_ssize_t m = T.shape[0], w = T.shape[1]
    cdef Py_ssize_t i, k, nnz = 0
    cdef double p = T[r, c], f, v
    cdef Py_ssize_t *nz = <Py_ssize_t *> malloc(w * sizeof(Py_ssize_t))
    if nz == NULL:
        raise MemoryError()
    try:
        for k in range(w):
            if T[r, k] != 0.0:
                T[r, k] = T[r, k] / p
                nz[nnz] = k
                nnz += 1
        T[r, c] = 1.0
        for i in range(m):
            if i == r:
                continue
            f = T[i, c]
            if f == 0.0:
                continue
            for k in range(nnz):
                v = T[i, nz[k]] - f * T[r, nz[k]]
                if fabs(v) < DROP_TOL:
                    v = 0.0
                T[i, nz[k]] = v
            T[i, c] = 0.0
    finally:
        free(nz)


def entering_bland(double[::1] cost, Py_ssize_t ncols, double tol):
    cdef Py_ssize_t j
    for j in range(ncols):
        if cost[j] < -tol:
            return j
    return -1


def entering_dantzig(double[::1] cost, Py_ssize_t ncols, double tol):
    cdef Py_ssize_t j, best = -1
    cdef double bv = -tol
    for j in range(ncols):
        if cost[j] < bv:
            bv = cost[j]
            best = j
    return best


def ratio_test(double[:, ::1] T, Py_ssize_t c, long[::1] basis, Py_ssize_t m,
               double tol, double htol):
    """Harris two-pass ratio test on the last column; returns -1 if unbounded."""
    cdef Py_ssize_t i, best = -1, last = T.shape[1] - 1
    cdef double a, bound = 0.0, r, amax = 0.0, x
    cdef bint found = False
    for i in range(m):
        a = T[i, c]
        if a > tol:
            x = T[i, last] if T[i, last] > 0.0 else 0.0
            r = (x + htol) / a
            if not found or r < bound:
                bound = r
                found = True
    if not found:
        return -1
    for i in range(m):
        a = T[i, c]
        if a > tol and (T[i, last] if T[i, last] > 0.0 else 0.0) / a <= bound:
            if best < 0 or a > amax or (a == amax and basis[i] < basis[best]):
                amax = a
                best = i
    return best


def entering_steepest(double[:, ::1] T, Py_ssize_t m, Py_ssize_t ncols, double tol):
    """Exact steepest edge: maximise d_j^2 / (1 + |T[:m, j]|^2) over d_j < -tol."""
    cdef Py_ssize_t i, j, k, nc = 0, best = -1
    cdef double v, d, score, bestscore = 0.0
    cdef Py_ssize_t *cand = <Py_ssize_t *> malloc((ncols + 1) * sizeof(Py_ssize_t))
    cdef double *w = <double *> malloc((ncols + 1) * sizeof(double))
    if cand == NULL or w == NULL:
        free(cand)
        free(w)
        raise MemoryError()
    try:
        for j in range(ncols):
            if T[m, j] < -tol:
                cand[nc] = j
                w[nc] = 1.0
                nc += 1
        if nc == 0:
            return -1
        for i in range(m):
            for k in range(nc):
                v = T[i, cand[k]]
                if v != 0.0:
                    w[k] += v * v
        for k in range(nc):
            d = T[m, cand[k]]
            score = d * d / w[k]
            if best < 0 or score > bestscore:
                bestscore = score
                best = cand[k]
        return best
    finally:
        free(cand)
        free(w)
