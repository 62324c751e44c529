import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("COGRELAY_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("cogrelay._slots", ["src/cogrelay/_slots.pyx"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
