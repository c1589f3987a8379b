"""Numeric kernels: compiled extension when available, NumPy fallback otherwise.

``BACKEND`` names the implementation in use.  Set ``SPECSEG_PURE_PYTHON=1``
before import to force the fallback (used by the benchmark and by tests).
"""

import os

from . import _fallback

STATUS_CONVERGED = _fallback.STATUS_CONVERGED
STATUS_MAXITER = _fallback.STATUS_MAXITER
STATUS_DEGENERATE = _fallback.STATUS_DEGENERATE

if os.environ.get("SPECSEG_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

cusum_rows = _impl.cusum_rows
decompose_rank1 = _impl.decompose_rank1
