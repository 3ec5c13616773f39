"""Build the optional compiled chain kernel.

The package works without it (``shus._pycore`` is the pure-Python twin); a
failed or skipped compilation only costs speed.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SHUS_NO_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        extensions = [
            Extension(
                "shus._core",
                ["src/shus/_core.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the compiled and pure-Python kernels must agree bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
