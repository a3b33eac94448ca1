"""Builds the optional compiled kernels; the package falls back to pure Python without them."""

import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    # a failed compile must not break installation: _backend picks the fallback

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernels not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc})")


def extensions():
    if os.environ.get("MESHDENOISE_NO_EXT"):
        return []
    from Cython.Build import cythonize

    ext = Extension(
        "meshdenoise._kernels",
        ["src/meshdenoise/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: keeps results bit-identical to the fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
