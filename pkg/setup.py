import os

import numpy as np
from setuptools import setup

ext_modules = []
if os.environ.get("RYDSSH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "rydssh.numerics._dopri",
                    ["src/rydssh/numerics/_dopri.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
