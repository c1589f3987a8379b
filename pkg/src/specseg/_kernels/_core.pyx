# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Mirrors ``_fallback`` operation for operation: the CUSUM row transform and
the alternating tensor-power / truncated matrix-power iteration on the
rank-one block spectra.  Update rules, tie-breaking and status codes match
the fallback; only the arithmetic is compiled.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAXITER = 1
STATUS_DEGENERATE = 2

cdef int _CONVERGED = 0
cdef int _MAXITER = 1
cdef int _DEGENERATE = 2


def cusum_rows(double[:, ::1] x):
    """CUSUM transform along axis 0 of an (m, q) stack; see the fallback."""
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t q = x.shape[1]
    out_arr = np.empty((m - 1, q), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    pref_arr = np.zeros(q, dtype=np.float64)
    total_arr = np.zeros(q, dtype=np.float64)
    cdef double[::1] pref = pref_arr
    cdef double[::1] total = total_arr
    cdef Py_ssize_t i, j
    cdef double n1, n2, coef
    with nogil:
        for i in range(m):
            for j in range(q):
                total[j] += x[i, j]
        for i in range(m - 1):
            n1 = i + 1.0
            n2 = m - n1
            coef = sqrt(n1 * n2 / m)
            for j in range(q):
                pref[j] += x[i, j]
                out[i, j] = coef * ((total[j] - pref[j]) / n2 - pref[j] / n1)
    return out_arr


cdef inline double _norm(double* v, Py_ssize_t n) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        acc += v[i] * v[i]
    return sqrt(acc)


cdef inline void _truncate_norm(double* v, cnp.uint8_t* keep, Py_ssize_t p, Py_ssize_t k) nogil:
    # Keep the k largest magnitudes (ties: lowest index), zero the rest and
    # renormalise in place.  Matches a stable descending sort on |v|.
    cdef Py_ssize_t chosen, i, best
    cdef double bestval, acc
    if k < p:
        for i in range(p):
            keep[i] = 0
        for chosen in range(k):
            best = -1
            bestval = -1.0
            for i in range(p):
                if keep[i] == 0 and fabs(v[i]) > bestval:
                    bestval = fabs(v[i])
                    best = i
            keep[best] = 1
        for i in range(p):
            if keep[i] == 0:
                v[i] = 0.0
    acc = _norm(v, p)
    if acc > 0.0:
        for i in range(p):
            v[i] /= acc


def decompose_rank1(double[:, ::1] dre, double[:, ::1] dim,
                    Py_ssize_t s, Py_ssize_t e, Py_ssize_t nu1, Py_ssize_t k,
                    double[::1] gamma0, double tol,
                    Py_ssize_t max_outer, Py_ssize_t max_inner):
    """Alternating iteration on the implicit CUSUM of rank-one block spectra.

    Same contract as the fallback: returns ``(gamma, status, outer_used)``.
    """
    cdef Py_ssize_t B = dre.shape[0]
    cdef Py_ssize_t p = dre.shape[1]
    cdef Py_ssize_t m = e - s + 1
    cdef Py_ssize_t lo = nu1
    cdef Py_ssize_t mt = m - 1 - 2 * nu1
    if not (1 <= s < e <= B):
        raise ValueError(f"invalid interval ({s}, {e}) for B={B}")
    if mt < 1:
        raise ValueError(f"trim nu1={nu1} leaves no slices on [{s}, {e}]")

    gamma_arr = np.array(gamma0, dtype=np.float64)
    cdef double[::1] gamma = gamma_arr
    work = np.empty((m, 2), dtype=np.float64)   # projected spectra + prefix scratch
    cdef double[:, ::1] uw = work
    alpha_arr = np.empty(mt, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    wvec_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] wvec = wvec_arr
    scaled_re = np.empty((m, p), dtype=np.float64)
    scaled_im = np.empty((m, p), dtype=np.float64)
    cdef double[:, ::1] sre = scaled_re
    cdef double[:, ::1] sim = scaled_im
    dmat_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] dmat = dmat_arr
    g_arr = np.empty(p, dtype=np.float64)
    v_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef double[::1] v = v_arr
    keep_arr = np.zeros(p, dtype=np.uint8)
    cdef cnp.uint8_t[::1] keep = keep_arr

    cdef Py_ssize_t off = s - 1
    cdef Py_ssize_t i, j, t, it, b_rel
    cdef double acc_re, acc_im, pref, total, n1, n2, coef, na, suff_a, pref_c
    cdef double nv, dot, change, beta
    cdef int status = _MAXITER
    cdef Py_ssize_t outer = 0
    cdef int mm = <int>p, nn = <int>p, kk = <int>m
    cdef int lda = <int>p, ldb = <int>p, ldc = <int>p
    cdef double one = 1.0, zero = 0.0

    with nogil:
        while outer < max_outer:
            outer += 1
            # Projected spectra on the interval and their total.
            total = 0.0
            for i in range(m):
                acc_re = 0.0
                acc_im = 0.0
                for j in range(p):
                    acc_re += dre[off + i, j] * gamma[j]
                    acc_im += dim[off + i, j] * gamma[j]
                uw[i, 0] = acc_re * acc_re + acc_im * acc_im
                total += uw[i, 0]
            # CUSUM over the trimmed slice offsets.
            pref = 0.0
            for i in range(lo):
                pref += uw[i, 0]
            na = 0.0
            for t in range(mt):
                b_rel = lo + t
                pref += uw[b_rel, 0]
                n1 = b_rel + 1.0
                n2 = m - n1
                coef = sqrt(n1 * n2 / m)
                alpha[t] = coef * ((total - pref) / n2 - pref / n1)
                na += alpha[t] * alpha[t]
            na = sqrt(na)
            if na == 0.0:
                status = _DEGENERATE
                outer -= 1
                break
            for t in range(mt):
                alpha[t] /= na
            # Block weights: w_i = prefC(i) - suffA(i), where A_b and C_b scale
            # alpha by the left/right contrast levels of slice b.
            suff_a = 0.0
            for b_rel in range(m - 2, -1, -1):
                if lo <= b_rel < lo + mt:
                    n1 = b_rel + 1.0
                    n2 = m - n1
                    coef = sqrt(n1 * n2 / m)
                    suff_a += alpha[b_rel - lo] * coef / n1
                uw[b_rel, 1] = suff_a
            pref_c = 0.0
            for i in range(m):
                suff_a = uw[i, 1] if i <= m - 2 else 0.0
                wvec[i] = pref_c - suff_a
                if i <= m - 2 and lo <= i < lo + mt:
                    n1 = i + 1.0
                    n2 = m - n1
                    coef = sqrt(n1 * n2 / m)
                    pref_c += alpha[i - lo] * coef / n2
            # D = sum_i w_i * (re_i re_i^T + im_i im_i^T) via two GEMMs.
            for i in range(m):
                for j in range(p):
                    sre[i, j] = wvec[i] * dre[off + i, j]
                    sim[i, j] = wvec[i] * dim[off + i, j]
            dgemm("N", "T", &mm, &nn, &kk, &one,
                  &sre[0, 0], &lda, &dre[off, 0], &ldb, &zero, &dmat[0, 0], &ldc)
            beta = 1.0
            dgemm("N", "T", &mm, &nn, &kk, &one,
                  &sim[0, 0], &lda, &dim[off, 0], &ldb, &beta, &dmat[0, 0], &ldc)
            # Truncated matrix power loop.
            for j in range(p):
                g[j] = gamma[j]
            for it in range(max_inner):
                for i in range(p):
                    acc_re = 0.0
                    for j in range(p):
                        acc_re += dmat[i, j] * g[j]
                    v[i] = acc_re
                nv = _norm(&v[0], p)
                if nv == 0.0:
                    status = _DEGENERATE
                    for j in range(p):
                        gamma[j] = g[j]
                    break
                for i in range(p):
                    v[i] /= nv
                _truncate_norm(&v[0], &keep[0], p, k)
                dot = 0.0
                for i in range(p):
                    dot += v[i] * g[i]
                if dot < 0.0:
                    for i in range(p):
                        v[i] = -v[i]
                change = 0.0
                for i in range(p):
                    change += (v[i] - g[i]) * (v[i] - g[i])
                    g[i] = v[i]
                if sqrt(change) < tol:
                    break
            if status == _DEGENERATE:
                outer -= 1
                break
            dot = 0.0
            for i in range(p):
                dot += g[i] * gamma[i]
            if dot < 0.0:
                for i in range(p):
                    g[i] = -g[i]
            change = 0.0
            for i in range(p):
                change += (g[i] - gamma[i]) * (g[i] - gamma[i])
                gamma[i] = g[i]
            if sqrt(change) < tol:
                status = _CONVERGED
                break

    return gamma_arr, status, outer
