import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "kgalign._ckernels",
                ["src/kgalign/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    # The package works without the compiled core (numpy fallback kicks in
    # at import), so a missing compiler must not break installation.
    for ext in extensions:
        ext.optional = True

setup(ext_modules=extensions)
