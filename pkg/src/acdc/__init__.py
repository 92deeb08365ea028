"""Digital-cousin scene compiler.

Turns a single-image extraction bundle plus an asset database into matched
assets, a physically plausible scene description, articulation trajectories,
and reconstruction-quality metrics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
