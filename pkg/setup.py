import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [
            Extension(
                "kerrqnn._kernels._lindblad_cy",
                ["src/kerrqnn/_kernels/_lindblad_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
)
