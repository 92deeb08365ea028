"""Build script for the optional compiled nearest-neighbor kernels.

The package works without the extension (a numpy fallback is selected at
import time); set ACDC_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ACDC_SKIP_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "acdc._kernels._native",
                    ["src/acdc/_kernels/_native.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        print(f"WARNING: compiled kernels disabled ({exc}); numpy fallback will be used")
        ext_modules = []

setup(ext_modules=ext_modules)
