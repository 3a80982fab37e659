"""Build hooks for the optional compiled kernel extension.

The package works without the extension: tracelab.kernels falls back to
the numpy implementations in tracelab._pykernels when the compiled
module is missing.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tracelab._ckernels",
                ["src/tracelab/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
