"""Build script for the optional compiled kernels.

The Cython extension ``amplituder.solver._ckernels`` is built when Cython and a
C compiler are available; otherwise the package installs without it and the
numpy kernels are used at runtime.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AMPLITUDER_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "amplituder.solver._ckernels",
                    ["src/amplituder/solver/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
