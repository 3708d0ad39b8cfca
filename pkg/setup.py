"""Build script with an optional compiled kernel extension.

The package runs fine without the extension (a numpy fallback is selected at
import time); set EXBMDP_PURE=1 to skip building it entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EXBMDP_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "exbmdp._kernels",
                    ["src/exbmdp/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
