"""Build script: compiles the optional Cython speedup module.

The package works without the extension (a pure-Python fallback is
selected at import time), so compilation failures are non-fatal.
"""

from setuptools import Extension, setup

extensions = []
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "figseek._kernels._speedups",
                ["src/figseek/_kernels/_speedups.pyx"],
                # -ffp-contract=off keeps the C arithmetic bit-identical
                # to the pure-Python fallback (no FMA contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=extensions)
