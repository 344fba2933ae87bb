import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = cythonize(
    [
        Extension(
            "relind._core",
            ["src/relind/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
            optional=True,
        )
    ],
    compiler_directives={"language_level": "3"},
)

setup(ext_modules=extensions)
