"""Build script: compiles the optional enumeration speedup extension.

The package works without the extension (a pure-Python fallback is
selected at import time), so any failure here is non-fatal.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/tricrush/_speedups.pyx"],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"tricrush: skipping compiled kernel ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
