import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]

extensions = [
    Extension(
        "stancescope._kernels._core",
        ["src/stancescope/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=define_macros,
        optional=True,  # pure-python fallback ships alongside
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
