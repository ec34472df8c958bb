"""Build script.

The compiled kernel extension is optional: it is built only when Cython is
importable in the build environment (use ``pip install -e . --no-build-isolation``
or ``python setup.py build_ext --inplace``).  Without it the package falls back
to the pure-numpy kernels at import time.

Set AENR_PURE_PYTHON=1 to skip the extension even when Cython is available.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AENR_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "aenr._kernels",
                    sources=["src/aenr/_kernels.pyx"],
                    extra_compile_args=["-O3", "-ffast-math"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
