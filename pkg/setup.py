"""Build script: compiles the optional Cython search core.

The extension is a pure speedup; if Cython or a C compiler is missing the
build falls through and the package runs on the pure-Python backend.
"""

import logging

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

log = logging.getLogger("pathpool.setup")


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        log.warning("Cython not available; building without the compiled core")
        return []
    return cythonize(
        [
            Extension(
                "pathpool.pooling._kernels_c",
                ["src/pathpool/pooling/_kernels_c.pyx"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": False,
        },
    )


class OptionalBuildExt(build_ext):
    """Treat extension build failures as non-fatal."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken
            log.warning("compiled core skipped: %s", exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            log.warning("compiled core %s skipped: %s", ext.name, exc)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
