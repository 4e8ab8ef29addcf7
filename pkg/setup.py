"""Build script: compiles the optional classifier kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); set VULNTRIAGE_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("VULNTRIAGE_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "vulntriage.classifier._ckernels",
                    ["src/vulntriage/classifier/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    # -ffp-contract=off keeps the elementwise AdamW math
                    # bit-compatible with the numpy fallback (no fused
                    # multiply-add surprises).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
