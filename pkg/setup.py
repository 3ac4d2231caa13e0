import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [
            Extension(
                "fingerkit._ridge_kernel",
                ["src/fingerkit/_ridge_kernel.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
