import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ELASTIC_TILINGS_PURE"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("elastic_tilings._kernel", ["src/elastic_tilings/_kernel.pyx"],
                       extra_compile_args=["-O3", "-ffp-contract=off"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
