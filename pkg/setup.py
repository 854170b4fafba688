"""Build script: compiles the Markov-chain kernel extension when possible.

The package works without the extension (a pure-Python fallback is selected
at import time), but sampling large regions is orders of magnitude faster
with it.  `pip install -e . --no-build-isolation` builds it in place.
"""

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "dimervar._chain",
                ["src/dimervar/_chain.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
