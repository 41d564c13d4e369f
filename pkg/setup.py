"""Build the optional Cython search kernel.

If Cython or a compiler is missing the package still installs; the
pure-Python search in ``wireless_dpsgd._search_py`` is used instead.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("WIRELESS_DPSGD_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "wireless_dpsgd._search_ext",
                    ["src/wireless_dpsgd/_search_ext.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"warning: skipping Cython kernel ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
