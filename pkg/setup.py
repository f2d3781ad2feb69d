import numpy
from setuptools import Extension, setup

try:
    import scipy  # noqa: F401  (the extension borrows BLAS through scipy)
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "carebandit._kernels._ridge_cy",
        ["src/carebandit/_kernels/_ridge_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if cythonize is not None:
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
else:
    # Without Cython or scipy the package still works through the numpy
    # fallback selected at import time in carebandit._kernels.
    ext_modules = []

setup(ext_modules=ext_modules)
