"""Optional compiled enumeration kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("HODGELOCUS_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/hodgelocus/_fpenum.pyx",
            compiler_directives={"language_level": "3"},
            quiet=True,
        )
        for e in ext_modules:
            e.include_dirs.append(numpy.get_include())
            e.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
