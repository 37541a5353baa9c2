"""Build script for the optional compiled kernels.

The package works without the extension (a pure numpy/scipy fallback is
selected at import time); building it just makes the EM sweep and the
system-matrix ray tracer considerably faster.  Set SPECTSUP_NO_EXT=1 to
skip compilation entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SPECTSUP_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/spectsup/_kernels.pyx"],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
