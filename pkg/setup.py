import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "primsel.kernels._kernels",
        ["src/primsel/kernels/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
]

# PRIMSEL_SKIP_EXT=1 installs without the compiled core; the package then
# falls back to the numpy kernels at import time.
if cythonize is not None and not os.environ.get("PRIMSEL_SKIP_EXT"):
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    ext_modules = []

setup(ext_modules=ext_modules)
