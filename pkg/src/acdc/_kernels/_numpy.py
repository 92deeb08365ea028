"""Pure-numpy fallback for the nearest-neighbor kernel."""

import numpy as np

# Cap on floats materialized per chunk of the (nq, nc, d) difference tensor.
_CHUNK_BUDGET = 4_000_000


def min_sqdist(query: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Squared L2 distance from each query row to its nearest row of ``cand``."""
    if query.shape[1] != cand.shape[1]:
        raise ValueError("query and candidate dimensions differ")
    nq = query.shape[0]
    out = np.empty(nq, dtype=np.float64)
    step = max(1, _CHUNK_BUDGET // max(1, cand.size))
    for s in range(0, nq, step):
        diff = query[s : s + step, None, :] - cand[None, :, :]
        out[s : s + step] = np.einsum("ijk,ijk->ij", diff, diff).min(axis=1)
    return out
