"""Build script; the compiled kernel extension is optional.

The Gaussian log-density kernel used by the EM loop has a Cython
implementation (psm._ckernels) and a pure-numpy fallback selected at
import time.  If Cython or a C compiler is unavailable the extension is
skipped and the package still works.  Set PSM_NO_EXT=1 to skip the
extension build explicitly.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("PSM_NO_EXT") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "psm._ckernels",
        sources=["src/psm/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
