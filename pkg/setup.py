"""Build script: compiles the Monte Carlo kernel extension when possible.

The package works without the extension (a pure-numpy fallback is selected
at import time); set RELAYCAP_SKIP_EXT=1 to skip compilation explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("RELAYCAP_SKIP_EXT"):
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "relaycap._kernels_cy",
                ["src/relaycap/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
