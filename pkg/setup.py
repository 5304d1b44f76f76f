"""Build script for the optional compiled core.

The OpenMP extension is optional: if it fails to compile the package still
installs and falls back to the pure-Python kernels.
"""

import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("SPOCH_NO_EXT") != "1":
    omp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext = Extension(
        "spoch._core",
        ["src/spoch/_core.pyx"],
        include_dirs=[np.get_include()],
        language="c++",
        # no -march=native and no fused multiply-add so scores match the Python twin bit for bit
        extra_compile_args=["-O3", "-std=c++17", "-ffp-contract=off", *omp],
        extra_link_args=omp,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3, quiet=True)

setup(ext_modules=ext_modules)
