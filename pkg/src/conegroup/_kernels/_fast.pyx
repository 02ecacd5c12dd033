# cython: language_level=3
"""Compiled hot loops: batched cone margins and the S-procedure line search.

Mirrors ``_pyfallback`` function for function.  Inputs are validated and
made contiguous by the dispatching wrappers in ``conegroup._kernels``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dsyev

cnp.import_array()

cdef double GOLDEN = 0.6180339887498949


def quad_margins(const double[:, ::1] Y, const double[:, ::1] Qn,
                 const double[::1] a_unit):
    cdef Py_ssize_t m = Y.shape[0], n = Y.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double nrm2, q, lin, row, m1, m2
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    for i in range(m):
        nrm2 = 0.0
        lin = 0.0
        q = 0.0
        for j in range(n):
            nrm2 += Y[i, j] * Y[i, j]
            lin += a_unit[j] * Y[i, j]
            row = 0.0
            for k in range(n):
                row += Qn[j, k] * Y[i, k]
            q += Y[i, j] * row
        if nrm2 == 0.0:
            res[i] = 0.0
            continue
        m1 = -q / nrm2
        m2 = lin / sqrt(nrm2)
        res[i] = m1 if m1 < m2 else m2
    return out


def facet_margins(const double[:, ::1] Y, const double[:, ::1] H):
    cdef Py_ssize_t m = Y.shape[0], n = Y.shape[1], f = H.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double nrm2, best, s
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    for i in range(m):
        nrm2 = 0.0
        for j in range(n):
            nrm2 += Y[i, j] * Y[i, j]
        if nrm2 == 0.0:
            res[i] = 0.0
            continue
        best = 1e300
        for r in range(f):
            s = 0.0
            for j in range(n):
                s += H[r, j] * Y[i, j]
            if s < best:
                best = s
        res[i] = best / sqrt(nrm2)
    return out


cdef double _lmax(const double[:, ::1] M, const double[:, ::1] Q, double lam,
                  int n, double* a, double* w, double* work, int lwork) nogil:
    cdef int i, j, info = 0
    cdef char jobz = b'N'
    cdef char uplo = b'U'
    for i in range(n):
        for j in range(n):
            # column-major fill; matrix is symmetric so layout is moot
            a[i + j * n] = M[i, j] - lam * Q[i, j]
    dsyev(&jobz, &uplo, &n, a, &n, w, work, &lwork, &info)
    if info != 0:
        return 1e300
    return w[n - 1]


cdef void _golden(const double[:, ::1] M, const double[:, ::1] Q, double hi,
                  int iters, int n, double* a, double* w, double* work,
                  int lwork, double* lam_out, double* val_out) nogil:
    cdef double lo = 0.0, x1, x2, f1, f2, f0, fh
    cdef int it
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = _lmax(M, Q, x1, n, a, w, work, lwork)
    f2 = _lmax(M, Q, x2, n, a, w, work, lwork)
    for it in range(iters):
        if f1 <= f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = _lmax(M, Q, x1, n, a, w, work, lwork)
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = _lmax(M, Q, x2, n, a, w, work, lwork)
    if f1 <= f2:
        lam_out[0] = x1
        val_out[0] = f1
    else:
        lam_out[0] = x2
        val_out[0] = f2
    # the endpoint lambda = 0 is not bracketed by interior probes
    f0 = _lmax(M, Q, 0.0, n, a, w, work, lwork)
    if f0 < val_out[0]:
        lam_out[0] = 0.0
        val_out[0] = f0


def sproc_min_batch(const double[:, :, ::1] Ms, const double[:, ::1] Qn,
                    const double[::1] his, int iters):
    cdef Py_ssize_t k = Ms.shape[0]
    cdef int n = <int>Ms.shape[1]
    cdef int lwork = 4 * n if n > 1 else 4
    cdef Py_ssize_t b
    lams = np.empty(k, dtype=np.float64)
    vals = np.empty(k, dtype=np.float64)
    cdef double[::1] L = lams
    cdef double[::1] V = vals
    cdef double* a = <double*>malloc(n * n * sizeof(double))
    cdef double* w = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(lwork * sizeof(double))
    if a == NULL or w == NULL or work == NULL:
        free(a)
        free(w)
        free(work)
        raise MemoryError()
    try:
        for b in range(k):
            _golden(Ms[b], Qn, his[b], iters, n, a, w, work, lwork,
                    &L[b], &V[b])
    finally:
        free(a)
        free(w)
        free(work)
    return lams, vals
