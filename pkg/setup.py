import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

PYX = "src/stigmergraph/_kernels/_fast.pyx"

extensions = []
if cythonize is not None and os.path.exists(PYX):
    extensions = cythonize(
        [Extension("stigmergraph._kernels._fast", [PYX])],
        language_level="3",
    )

# The compiled kernel is an accelerator; the package works without it
# (stigmergraph._kernels falls back to the pure-Python implementation).
setup(ext_modules=extensions)
