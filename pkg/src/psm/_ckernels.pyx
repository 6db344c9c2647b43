# Compiled Gaussian log-density kernel: the hot inner loop of EM fitting
# and of every density evaluation (scoring, divergence, conditioning).
# Contract matches psm.density._kernels_py.component_logpdf.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def component_logpdf(
    double[:, ::1] X,
    double[:, ::1] means,
    double[:, :, ::1] chols,
    double[::1] log_norms,
    out=None,
):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t K = means.shape[0]
    if out is None:
        out = np.empty((n, K), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef double[::1] z = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t i, k, r, c
    cdef double acc, sumsq
    with nogil:
        for i in range(n):
            for k in range(K):
                sumsq = 0.0
                # forward substitution: L z = x - mu
                for r in range(d):
                    acc = X[i, r] - means[k, r]
                    for c in range(r):
                        acc -= chols[k, r, c] * z[c]
                    acc /= chols[k, r, r]
                    z[r] = acc
                    sumsq += acc * acc
                res[i, k] = log_norms[k] - 0.5 * sumsq
    return out
