"""Co-spectrum CUSUM transformation for block tensors and block vectors.

For a block sequence G_s..G_e the transform produces, for each split point
b in s..e-1, the scaled difference between the mean of Re(G) after b and
the mean up to b:

    C_b = sqrt((b-s+1)(e-b)/(e-s+1)) * (mean_{i>b} Re G_i - mean_{i<=b} Re G_i)

Output slice b is stored at offset b - s, so callers recover absolute block
indices by adding s.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntervalError, ShapeError

# Above this many blocks, block means are accumulated in extended precision
# (the practical B is far smaller; long synthetic sequences appear in the
# invariant suite).
_PLAIN_SUM_LIMIT = 1024


@dataclass(frozen=True)
class CusumTensor:
    """Real symmetric CUSUM slices C_{s,b,e} for b = s..e-1."""

    s: int
    e: int
    slices: np.ndarray = field(repr=False)

    @property
    def p(self):
        return self.slices.shape[1]

    @property
    def n_slices(self):
        return self.slices.shape[0]


def _cusum_stack(x):
    """CUSUM along axis 0 of an (m, q) real stack."""
    m = x.shape[0]
    if m <= _PLAIN_SUM_LIMIT:
        return _kernels.cusum_rows(np.ascontiguousarray(x, dtype=np.float64))
    # Compensated path: extended-precision prefix sums.
    cs = np.cumsum(x.astype(np.longdouble), axis=0)
    n1 = np.arange(1, m, dtype=np.longdouble)
    n2 = m - n1
    coef = np.sqrt(n1 * n2 / m)
    out = coef[:, None] * ((cs[-1] - cs[:-1]) / n2[:, None] - cs[:-1] / n1[:, None])
    return out.astype(np.float64)


def cusum_tensor(slices, s, e):
    """CUSUM transform of a stack of (possibly complex) block matrices.

    ``slices`` has shape (e-s+1, p, p) holding G_s..G_e in block order; only
    the real part enters (the co-spectrum).  Returns a :class:`CusumTensor`
    with e-s real symmetric slices.
    """
    if s >= e:
        raise IntervalError(f"need s < e, got s={s}, e={e}")
    if s < 1:
        raise IntervalError(f"block indices are 1-based, got s={s}")
    g = np.asarray(slices)
    if g.ndim != 3 or g.shape[1] != g.shape[2]:
        raise ShapeError(f"expected (m, p, p) slices, got {g.shape}")
    if g.shape[0] != e - s + 1:
        raise ShapeError(f"{g.shape[0]} slices for interval [{s}, {e}]")
    m, p = g.shape[0], g.shape[1]
    flat = _cusum_stack(np.ascontiguousarray(g.real.reshape(m, p * p)))
    return CusumTensor(s=int(s), e=int(e), slices=flat.reshape(m - 1, p, p))


def cusum_vector(v, s, e):
    """CUSUM transform of a real block vector (a 1 x 1 x B tensor)."""
    if s >= e:
        raise IntervalError(f"need s < e, got s={s}, e={e}")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got ndim={v.ndim}")
    if v.shape[0] != e - s + 1:
        raise ShapeError(f"{v.shape[0]} entries for interval [{s}, {e}]")
    return _cusum_stack(v[:, None])[:, 0]
