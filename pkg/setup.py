import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: lylab.kernels falls back to the numpy
# implementation when the extension is absent or fails to build.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "lylab._kernels",
                ["src/lylab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
