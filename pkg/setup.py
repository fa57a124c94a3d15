"""Build script: compiles the optional coefficient-coder extension.

The package works without the extension (a pure-Python coder is selected at
import time), so a failing C build must not fail the install.  Set
BLOCKRC_NO_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"blockrc: extension build skipped ({exc}); using pure-Python coder")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"blockrc: building {ext.name} failed ({exc}); using pure-Python coder")


ext_modules = []
if not os.environ.get("BLOCKRC_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/blockrc/codec/_coder.pyx"],
            language_level=3,
        )
    except ImportError:
        print("blockrc: Cython not available; using pure-Python coder")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
