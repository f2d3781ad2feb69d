"""Compiled replay hot kernels.

Mirrors the signatures of ``_ridge_py``; selected at import time by
``carebandit._kernels`` when the extension built successfully.  The
dense O(d^2) products go through BLAS; the per-step glue (denominators,
clamps, square roots) stays in C so a replay step does no Python-level
dispatch or temporary allocation beyond one scratch vector.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport daxpy, ddot, dgemm, dgemv, dger

cnp.import_array()

cdef int ONE_I = 1
cdef double ONE_D = 1.0
cdef double ZERO_D = 0.0
# Row-major arrays are the transposes of the column-major views BLAS
# sees, hence the 'n'/'t' choices below.
cdef char TRANS_N = b'n'
cdef char TRANS_T = b't'


cdef inline void _matvec(double[:, ::1] A, double[::1] x, double[::1] y) noexcept:
    """y := A @ x for a C-contiguous square matrix A."""
    cdef int d = <int> A.shape[0]
    dgemv(&TRANS_T, &d, &d, &ONE_D, &A[0, 0], &d,
          &x[0], &ONE_I, &ZERO_D, &y[0], &ONE_I)


def sm_update(double[:, ::1] B, double[:, ::1] Binv, double[::1] f,
              double[::1] mu, double[::1] b, double r):
    """Rank-1 update of the ridge sufficient statistics.

    Applies B += b b^T, f += r b, the Sherman-Morrison update to Binv,
    and recomputes mu = Binv @ f.  All five arrays are modified in place.
    """
    cdef int d = <int> b.shape[0]
    cdef double[::1] u = np.empty(d, dtype=np.float64)
    cdef double denom, neg_inv, reward = r

    _matvec(Binv, b, u)
    denom = 1.0 + ddot(&d, &b[0], &ONE_I, &u[0], &ONE_I)
    neg_inv = -1.0 / denom
    # Both rank-1 updates are symmetric, so the row/column-major
    # mismatch between us and BLAS cancels out.
    dger(&d, &d, &neg_inv, &u[0], &ONE_I, &u[0], &ONE_I, &Binv[0, 0], &d)
    dger(&d, &d, &ONE_D, &b[0], &ONE_I, &b[0], &ONE_I, &B[0, 0], &d)
    daxpy(&d, &reward, &b[0], &ONE_I, &f[0], &ONE_I)
    _matvec(Binv, f, mu)


def quad_form(double[:, ::1] Binv, double[::1] b):
    """Return the quadratic form b^T Binv b as a float."""
    cdef int d = <int> b.shape[0]
    cdef double[::1] u = np.empty(d, dtype=np.float64)
    _matvec(Binv, b, u)
    return ddot(&d, &b[0], &ONE_I, &u[0], &ONE_I)


def ucb_scores(double[:, ::1] Binv, double[::1] mu, double[:, ::1] phi,
               double alpha, double[::1] out):
    """Upper-confidence scores for a batch of feature rows.

    out[i] = phi[i] . mu + alpha * sqrt(max(phi[i]^T Binv phi[i], 0)).
    """
    cdef int n = <int> phi.shape[0]
    cdef int d = <int> phi.shape[1]
    cdef double[:, ::1] U
    cdef double q
    cdef Py_ssize_t k
    if n == 0:
        return
    U = np.empty((n, d), dtype=np.float64)
    # Row-major U = phi @ Binv, computed as the column-major product
    # U^T = Binv^T @ phi^T in a single GEMM.
    dgemm(&TRANS_N, &TRANS_N, &d, &n, &d, &ONE_D, &Binv[0, 0], &d,
          &phi[0, 0], &d, &ZERO_D, &U[0, 0], &d)
    for k in range(n):
        q = ddot(&d, &phi[k, 0], &ONE_I, &U[k, 0], &ONE_I)
        if q < 0.0:
            q = 0.0
        out[k] = ddot(&d, &phi[k, 0], &ONE_I, &mu[0], &ONE_I) + alpha * sqrt(q)


def mean_scores(double[::1] mu, double[:, ::1] phi, double[::1] out):
    """Plain linear predictions: out[i] = phi[i] . mu."""
    cdef int n = <int> phi.shape[0]
    cdef int d = <int> phi.shape[1]
    if n == 0:
        return
    dgemv(&TRANS_T, &d, &n, &ONE_D, &phi[0, 0], &d,
          &mu[0], &ONE_I, &ZERO_D, &out[0], &ONE_I)
