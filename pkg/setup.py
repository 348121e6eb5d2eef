"""Build script for the optional compiled simulation core.

The package works without the extension: ``revshor.kernels`` falls back to
a numpy implementation when ``revshor._kernels`` cannot be imported.  The
build therefore never fails just because Cython or a C compiler is missing.
"""

import os
import sys

from setuptools import setup


def _extensions():
    if os.environ.get("REVSHOR_NO_EXT") == "1":
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:  # pragma: no cover - depends on build env
        print(f"revshor: skipping compiled core ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "revshor._kernels",
        ["src/revshor/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


try:
    setup(ext_modules=_extensions())
except SystemExit:  # pragma: no cover - compiler failure
    if os.environ.get("REVSHOR_NO_EXT") == "1":
        raise
    print("revshor: compiled core failed to build, installing pure Python only", file=sys.stderr)
    os.environ["REVSHOR_NO_EXT"] = "1"
    setup(ext_modules=[])
