"""Builds the compiled resonator kernel.

The extension is optional: if Cython or a C compiler is missing the install
still succeeds and sonomat falls back to the pure-numpy kernel at import time.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; building sonomat without the compiled kernel")
        return []
    from setuptools import Extension

    ext = Extension(
        "sonomat._kernel",
        ["src/sonomat/_kernel.pyx"],
        extra_compile_args=["-O3", "-ftree-vectorize"],
    )
    return cythonize([ext], language_level=3)


class optional_build_ext(build_ext):
    """Degrade to the pure-Python kernel instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken toolchain
            warnings.warn(f"compiled kernel build failed ({exc}); using pure-numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel build failed ({exc}); using pure-numpy fallback")


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
