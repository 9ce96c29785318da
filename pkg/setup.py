import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "goemax.kernels._cyloops",
                ["src/goemax/kernels/_cyloops.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
except Exception as exc:  # no Cython / no compiler: pure-Python fallback still works
    warnings.warn(f"building without compiled kernels: {exc}")

setup(ext_modules=ext_modules)
