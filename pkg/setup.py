"""Build script for the optional compiled kernels.

The pure-Python fallback in ``conegroup._kernels._pyfallback`` is always
available, so a failed compile only costs speed.  Set
``CONEGROUP_NO_EXT=1`` to skip the extension entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CONEGROUP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "conegroup._kernels._fast",
            ["src/conegroup/_kernels/_fast.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            language_level=3,
            compiler_directives={"boundscheck": False, "wraparound": False,
                                 "cdivision": True},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
