"""Build script: compiles the hot-loop kernels when Cython and a C toolchain
are available, and falls back to the pure-NumPy implementation otherwise."""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "covindex._kernels",
                sources=["src/covindex/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # No Cython: install runs with the pure-Python kernel backend.
    ext_modules = []

setup(ext_modules=ext_modules)
