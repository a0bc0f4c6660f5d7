import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-Python
# implementation at import time.  Set OPSCHED_PURE=1 to skip the build.
ext_modules = []
if os.environ.get("OPSCHED_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "opsched._kernels",
                    ["src/opsched/_kernels.pyx"],
                    # -ffp-contract=off keeps results bit-identical with the
                    # pure-Python kernels (no FMA contraction).
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
