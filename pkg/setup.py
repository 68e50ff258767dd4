"""Build script for the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile should not block installation.  Set
GREEDYNET_REQUIRE_CYTHON=1 to turn a build failure into a hard error.
"""

import os

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "greedynet._kernels",
                ["src/greedynet/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception:
    if os.environ.get("GREEDYNET_REQUIRE_CYTHON") == "1":
        raise
    extensions = []

setup(ext_modules=extensions)
