import os

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
if not os.environ.get("SKEWFORMS_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "skewforms._kernels._speedups",
                    ["src/skewforms/_kernels/_speedups.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install with the pure-Python kernels only.
        ext_modules = []

setup(ext_modules=ext_modules)
