"""Build script: compiles the optional fast-kernel extension.

The package works without the extension (a pure numpy implementation is
selected at import), so the build is marked optional and any compiler
failure degrades gracefully to the fallback.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "regclock._fastkern",
                ["src/regclock/_fastkern.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
