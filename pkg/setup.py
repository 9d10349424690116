import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("GEOMREC_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "geomrec._kernel",
        ["src/geomrec/_kernel.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
