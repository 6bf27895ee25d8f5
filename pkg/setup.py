import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernels are an optimization, not a requirement: the package
# falls back to the numpy reference backend when the extension is missing.
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "winosparse.kernels._fast",
                ["src/winosparse/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
