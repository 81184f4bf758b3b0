"""Build script: compiles the optional fast-kernel extension when Cython is around.

The package is fully functional without the extension; geoshare.kernels falls
back to the pure NumPy/Python implementations at import time.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import os

    import numpy
    from Cython.Build import cythonize

    if not os.path.exists("src/geoshare/kernels/_native.pyx"):
        raise ImportError
    ext_modules = cythonize(
        [
            Extension(
                "geoshare.kernels._native",
                ["src/geoshare/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
