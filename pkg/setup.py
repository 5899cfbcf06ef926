import os

from setuptools import setup

ext_modules = []
if os.environ.get("NOMASIM_SKIP_NATIVE") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "nomasim.kernels._native",
                    ["src/nomasim/kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install with the pure-python kernels only.
        ext_modules = []

setup(ext_modules=ext_modules)
