import os

import numpy
from setuptools import Extension, setup

# -ffp-contract=off: no fused multiply-add, so the compiled kernels follow the
# same IEEE arithmetic path as the pure-python fallback.
_PYX = "src/rank1thermo/_kernels/_core.pyx"
ext_modules = []
if os.path.exists(_PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rank1thermo._kernels._core",
                    [_PYX],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                    include_dirs=[numpy.get_include()],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # no cython: install pure; the package falls back at import time
        pass

setup(ext_modules=ext_modules)
