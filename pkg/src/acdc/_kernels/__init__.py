"""Distance kernels with a compiled fast path and a numpy fallback.

The compiled extension is selected at import when available; set
ACDC_PURE_PYTHON=1 to force the numpy implementation. Both backends
implement the same contract and agree to floating-point noise.
"""

import os

import numpy as np

from . import _numpy

if os.environ.get("ACDC_PURE_PYTHON") == "1":
    _impl = _numpy
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy

BACKEND = "numpy" if _impl is _numpy else "native"


def min_sqdist(query, cand) -> np.ndarray:
    """Per query vector, squared L2 distance to its nearest candidate vector.

    Args:
        query: (nq, d) array-like.
        cand: (nc, d) array-like, nc >= 1.
    """
    q = np.ascontiguousarray(query, dtype=np.float64)
    c = np.ascontiguousarray(cand, dtype=np.float64)
    if q.ndim != 2 or c.ndim != 2:
        raise ValueError("expected 2-D feature arrays")
    if c.shape[0] == 0:
        raise ValueError("empty candidate set")
    return _impl.min_sqdist(q, c)
