import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = os.environ.get("ATGJ_OPENMP", "1") != "0"

extensions = [
    Extension(
        "atgj._kernels",
        ["src/atgj/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"] + (["-fopenmp"] if openmp else []),
        extra_link_args=["-fopenmp"] if openmp else [],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
