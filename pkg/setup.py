"""Build the optional compiled flow kernel.

Set ``ZIPKIT_NO_EXT=1`` to skip it; the package then runs on its pure-Python
integrator.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ZIPKIT_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    name="zipkit._kernels",
                    sources=["src/zipkit/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
