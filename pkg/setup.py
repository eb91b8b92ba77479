"""Build script: compiles the optional Cython kernel.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed extension build downgrades to a warning instead
of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/levycoupling/coupling/_core.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover
    print(f"warning: Cython kernel not built ({exc}); using pure-Python fallback",
          file=sys.stderr)
    include_dirs = []

setup(
    ext_modules=ext_modules,
    include_dirs=include_dirs,
)
