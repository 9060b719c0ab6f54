"""Builds the optional compiled BM25 kernel.

The package works without it (a pure-Python kernel is selected at import
time), so a missing compiler or Cython never blocks installation.
Set VERIKB_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("VERIKB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/verikb/retrieval/_ckernel.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
