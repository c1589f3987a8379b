"""Pure-NumPy implementations of the hot kernels.

The compiled extension (``specseg._kernels._core``) implements the same
operations with identical update rules; this module is the fallback used
when the extension is unavailable and the reference the extension is tested
against.
"""

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAXITER = 1
STATUS_DEGENERATE = 2


def cusum_rows(x):
    """CUSUM transform along axis 0 of a stack of flattened slices.

    ``x`` has shape ``(m, q)``; entry ``b`` of the output (shape
    ``(m - 1, q)``) is ``sqrt((b+1)(m-1-b)/m)`` times the difference between
    the mean of rows ``b+1..m-1`` and the mean of rows ``0..b``.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    cs = np.cumsum(x, axis=0)
    n1 = np.arange(1, m, dtype=np.float64)
    n2 = m - n1
    coef = np.sqrt(n1 * n2 / m)
    left = cs[:-1] / n1[:, None]
    right = (cs[-1] - cs[:-1]) / n2[:, None]
    return coef[:, None] * (right - left)


def _truncate(v, k):
    # Keep the k largest magnitudes; ties resolved toward the lowest index.
    if k >= v.size:
        return v.copy()
    keep = np.argsort(-np.abs(v), kind="stable")[:k]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def _block_weights(alpha, m, lo, hi):
    # Weights w such that sum_b alpha_b * C_b equals sum_i w_i * G_i, where
    # C_b are the CUSUM slices of the block sequence G_i on [0, m-1] and b
    # runs over the trimmed slice offsets [lo, hi).
    n1 = np.arange(1, m, dtype=np.float64)
    n2 = m - n1
    coef = np.sqrt(n1 * n2 / m)
    a_full = np.zeros(m - 1)
    c_full = np.zeros(m - 1)
    a_full[lo:hi] = alpha * coef[lo:hi] / n1[lo:hi]
    c_full[lo:hi] = alpha * coef[lo:hi] / n2[lo:hi]
    suff_a = np.concatenate([np.cumsum(a_full[::-1])[::-1], [0.0]])
    pref_c = np.concatenate([[0.0], np.cumsum(c_full)])
    idx = np.arange(m)
    return pref_c[np.minimum(idx, m - 1)] - suff_a[np.minimum(idx, m - 1)]


def decompose_rank1(dre, dim, s, e, nu1, k, gamma0, tol, max_outer, max_inner):
    """Alternating tensor-power / truncated matrix-power iteration.

    Works on the CUSUM of the rank-one block spectra implied by the tapered
    DFT vectors ``dre + 1j*dim`` (shape ``(B, p)``), restricted to blocks
    ``s..e`` (1-based, inclusive) and trimmed by ``nu1`` slices at each end.
    The CUSUM tensor is never materialised: its mode-(1,2) contraction is
    the CUSUM of the projected spectra and its mode-3 contraction is a
    block-weighted Gram matrix of the DFT vectors.

    Returns ``(gamma, status, outer_used)`` where status is one of the
    STATUS_* codes; on STATUS_DEGENERATE the caller re-draws a start vector
    and re-enters with the remaining iteration budget.
    """
    re = np.ascontiguousarray(dre[s - 1 : e])
    im = np.ascontiguousarray(dim[s - 1 : e])
    m = e - s + 1
    lo = nu1
    hi = m - 1 - nu1
    gamma = np.array(gamma0, dtype=np.float64)

    for j in range(max_outer):
        proj = (re @ gamma) ** 2 + (im @ gamma) ** 2
        a = cusum_rows(proj[:, None])[lo:hi, 0]
        na = np.linalg.norm(a)
        if na == 0.0:
            return gamma, STATUS_DEGENERATE, j
        alpha = a / na

        w = _block_weights(alpha, m, lo, hi)
        dmat = (re * w[:, None]).T @ re + (im * w[:, None]).T @ im

        g = gamma
        for _ in range(max_inner):
            v = dmat @ g
            nv = np.linalg.norm(v)
            if nv == 0.0:
                return g, STATUS_DEGENERATE, j
            v = _truncate(v / nv, k)
            v /= np.linalg.norm(v)
            if v @ g < 0.0:
                v = -v
            change = np.linalg.norm(v - g)
            g = v
            if change < tol:
                break
        if g @ gamma < 0.0:
            g = -g
        change = np.linalg.norm(g - gamma)
        gamma = g
        if change < tol:
            return gamma, STATUS_CONVERGED, j + 1

    return gamma, STATUS_MAXITER, max_outer
