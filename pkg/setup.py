"""Build the optional Cython Jacobi kernel.

The package works without it: ``relmeas.linalg`` falls back to the
pure-Python sweep when the extension cannot be imported.

    python setup.py build_ext --inplace
"""
import os
import sys

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RELMEAS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("Cython not available; building pure-Python relmeas\n")
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "relmeas.linalg._jacobi_ext",
                    sources=["src/relmeas/linalg/_jacobi_ext.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
