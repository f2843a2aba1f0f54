"""Build script: compiles the optional sampling step kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import); set PATHCAP_PURE=1 to skip compilation explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("PATHCAP_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "pathcap.sampling._stepkernel",
                    ["src/pathcap/sampling/_stepkernel.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
