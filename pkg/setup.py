import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernel is optional; a pure-Python fallback is used when it is absent.
ext_modules = []
if os.environ.get("IRS_SENSE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "irs_sense._kernels",
                    sources=["src/irs_sense/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": 3, "embedsignature": True},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
