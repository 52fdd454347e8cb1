import os

from setuptools import setup

# The compiled kernel module is optional: the package falls back to the
# numpy implementation in genmatte._kernels_py when the extension is
# missing.  Set GENMATTE_SKIP_EXT=1 to skip compilation entirely.
ext_modules = []
if not os.environ.get("GENMATTE_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "genmatte._kernels",
                    sources=["src/genmatte/_kernels.pyx"],
                    # -ffp-contract=off keeps elementwise arithmetic
                    # bit-identical to the numpy fallback (no FMA fusion).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
