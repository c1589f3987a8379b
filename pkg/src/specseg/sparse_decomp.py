"""Leading k-sparse mode-1 component of a CUSUM tensor.

The estimator alternates two updates on the trimmed tensor: a tensor-power
step fixing the block mode (``alpha = Norm(T x1 gamma x2 gamma)``), and a
truncated matrix-power loop on ``D = T x3 alpha`` that re-sparsifies the
projector after every multiplication.  The output is defined up to sign;
comparisons should use the absolute inner product.
"""

from dataclasses import dataclass, field

import numpy as np

from .cusum import CusumTensor
from .errors import ConfigError, DegenerateTensorError, IntervalError, NumericalError

STATUS_CONVERGED = 0
STATUS_MAXITER = 1


@dataclass(frozen=True)
class ProjectionVector:
    """Unit-norm, at-most-k-sparse real projector."""

    values: np.ndarray = field(repr=False)

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def nnz(self):
        return int(np.count_nonzero(self.values))

    @property
    def support(self):
        return np.flatnonzero(self.values)


@dataclass(frozen=True)
class DecompSettings:
    """Iteration controls: sparsity budget, boundary trim and stop rules."""

    k: int
    nu1: int = 0
    max_outer: int = 50
    max_inner: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"sparsity budget must be >= 1, got {self.k}")
        if self.nu1 < 0:
            raise ConfigError(f"nu1 must be >= 0, got {self.nu1}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("iteration caps must be >= 1")


def truncate_top_k(c, k):
    """Zero all but the k largest-magnitude entries (ties: lowest index wins)."""
    c = np.asarray(c, dtype=np.float64)
    if not 1 <= k <= c.shape[0]:
        raise ConfigError(f"need 1 <= k <= p, got k={k}, p={c.shape[0]}")
    if k >= c.shape[0]:
        return c.copy()
    keep = np.argsort(-np.abs(c), kind="stable")[:k]
    out = np.zeros_like(c)
    out[keep] = c[keep]
    return out


def _trim_slices(t_hat, nu1):
    m = t_hat.n_slices
    if m - 2 * nu1 < 1:
        raise IntervalError(
            f"trimming nu1={nu1} leaves no slices on [{t_hat.s}, {t_hat.e}]"
        )
    return t_hat.slices[nu1 : m - nu1]


def _energy_order(trimmed):
    # Rank series by the energy of their auto-spectrum CUSUM (the tensor
    # diagonal).  Relabeling the series permutes this ranking, which keeps
    # the randomised start equivariant under series permutations.
    diag = np.einsum("bii->bi", trimmed)
    return np.argsort(-np.einsum("bi,bi->i", diag, diag), kind="stable")


def _ranked_start(r, order):
    v = np.empty_like(r)
    v[order] = r
    return v / np.linalg.norm(v)


def _random_sparse_unit(p, k, rng):
    idx = rng.choice(p, size=min(k, p), replace=False)
    vals = rng.standard_normal(idx.shape[0])
    while not np.any(vals):
        vals = rng.standard_normal(idx.shape[0])
    v = np.zeros(p)
    v[idx] = vals
    return v / np.linalg.norm(v)


def _iterate(trimmed, k, gamma0, tol, max_outer, max_inner, rng, trace=None):
    """Run the alternating iteration on pre-trimmed dense slices.

    Zero iterates (all-zero contraction or matrix power) are replaced by a
    fresh random k-sparse unit vector from ``rng``, spending one outer
    iteration.
    """
    gamma = gamma0.copy()
    p = gamma.shape[0]
    status = STATUS_MAXITER
    j = 0
    while j < max_outer:
        j += 1
        a = np.einsum("bij,i,j->b", trimmed, gamma, gamma)
        na = np.linalg.norm(a)
        if na == 0.0:
            gamma = _random_sparse_unit(p, k, rng)
            continue
        alpha = a / na
        if trace is not None:
            trace.append(na)
        dmat = np.tensordot(alpha, trimmed, axes=([0], [0]))
        if not np.all(np.isfinite(dmat)):
            raise NumericalError("non-finite matrix power operand")
        g = gamma
        degenerate = False
        for _ in range(max_inner):
            v = dmat @ g
            nv = np.linalg.norm(v)
            if nv == 0.0:
                g = _random_sparse_unit(p, k, rng)
                degenerate = True
                break
            v = truncate_top_k(v / nv, k)
            v /= np.linalg.norm(v)
            if v @ g < 0.0:
                v = -v
            change = np.linalg.norm(v - g)
            g = v
            if change < tol:
                break
        if degenerate:
            gamma = g
            continue
        if g @ gamma < 0.0:
            g = -g
        change = np.linalg.norm(g - gamma)
        gamma = g
        if change < tol:
            status = STATUS_CONVERGED
            break
    # Canonical sign: the largest-magnitude coordinate is positive.
    lead = int(np.argmax(np.abs(gamma)))
    if gamma[lead] < 0:
        gamma = -gamma
    return gamma, status


def pilot_init(t_hat, k, settings=None):
    """Deterministic starting projector from a trace-derived pilot.

    The block mode is seeded with the (normalised) trace of the trimmed
    CUSUM slices; the start vector is the leading eigenvector of the
    resulting matrix restricted to its strongest off-diagonal rows, then
    truncated to k entries.  Returns None when the tensor carries no trace
    signal, in which case callers fall back to a random start.
    """
    p = t_hat.p
    if not 1 <= k <= p:
        raise ConfigError(f"need 1 <= k <= p, got k={k}, p={p}")
    if p == 1:
        return ProjectionVector(np.array([1.0]))
    nu1 = settings.nu1 if settings is not None else 0
    trimmed = _trim_slices(t_hat, nu1)
    trace = np.einsum("bii->b", trimmed)
    norm = np.linalg.norm(trace)
    if norm == 0.0:
        return None
    dmat = np.tensordot(trace / norm, trimmed, axes=([0], [0]))
    off = dmat - np.diag(np.diag(dmat))
    energy = np.einsum("ij,ij->i", off, off)
    cand = np.sort(np.argsort(-energy, kind="stable")[: min(2 * k, p)])
    sub = dmat[np.ix_(cand, cand)]
    if not np.any(sub):
        return None
    vals, vecs = np.linalg.eigh(sub)
    v = np.zeros(p)
    v[cand] = vecs[:, int(np.argmax(np.abs(vals)))]
    v = truncate_top_k(v, k)
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        return None
    return ProjectionVector(v / vnorm)


def init_projection(t_hat, k, rng, settings=None):
    """Starting projector: unconstrained run, then truncate to k and renormalise.

    The start of the unconstrained run is a random unit vector whose entries
    are assigned in decreasing order of per-series tensor energy, so that
    relabeling the series permutes the result.  Raises
    :class:`DegenerateTensorError` on an all-zero tensor; the caller then
    substitutes a random k-sparse unit vector.
    """
    p = t_hat.p
    if not 1 <= k <= p:
        raise ConfigError(f"need 1 <= k <= p, got k={k}, p={p}")
    if p == 1:
        return ProjectionVector(np.array([1.0]))
    nu1 = settings.nu1 if settings is not None else 0
    trimmed = _trim_slices(t_hat, nu1)
    if not np.any(trimmed):
        raise DegenerateTensorError("all-zero tensor cannot seed a projection")
    tol = settings.tol if settings is not None else 1e-8
    mo = settings.max_outer if settings is not None else 50
    mi = settings.max_inner if settings is not None else 100
    start = _ranked_start(rng.standard_normal(p), _energy_order(trimmed))
    full, _ = _iterate(trimmed, p, start, tol, mo, mi, rng)
    init = truncate_top_k(full, k)
    init /= np.linalg.norm(init)
    return ProjectionVector(init)


def decompose(t_hat, settings, init, rng=None, return_info=False):
    """Extract the leading k-sparse mode-1 component of a CUSUM tensor.

    Parameters
    ----------
    t_hat : CusumTensor
        CUSUM slices on an interval [s, e]; nu1 slices are discarded from
        each end before iterating.
    settings : DecompSettings
        Sparsity budget k, trim, iteration caps and tolerance.
    init : ProjectionVector
        Unit-norm start.
    rng : numpy Generator, optional
        Source for restart draws when an iterate collapses to zero.  The
        default is a fixed generator, keeping the operation deterministic.
    return_info : bool
        Also return a dict with the convergence status and the objective
        trace (norm of the block-mode contraction per outer iteration).

    Returns
    -------
    ProjectionVector, or (ProjectionVector, dict) when ``return_info``.
    """
    if not isinstance(t_hat, CusumTensor):
        raise ConfigError("decompose expects a CusumTensor")
    p = t_hat.p
    if not 1 <= settings.k <= p:
        raise ConfigError(f"need 1 <= k <= p, got k={settings.k}, p={p}")
    if p == 1:
        gamma = ProjectionVector(np.array([1.0]))
        return (gamma, {"status": STATUS_CONVERGED, "objective": []}) if return_info else gamma
    g0 = np.asarray(init.values, dtype=np.float64)
    if abs(np.linalg.norm(g0) - 1.0) > 1e-8:
        raise ConfigError("init must have unit norm")
    if rng is None:
        rng = np.random.default_rng(0)
    trimmed = _trim_slices(t_hat, settings.nu1)
    trace = []
    gamma, status = _iterate(
        trimmed, settings.k, g0, settings.tol, settings.max_outer,
        settings.max_inner, rng, trace=trace,
    )
    if not np.all(np.isfinite(gamma)):
        raise NumericalError("non-finite projector")
    out = ProjectionVector(gamma)
    if return_info:
        return out, {"status": status, "objective": trace}
    return out
