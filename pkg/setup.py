import os

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    pass
else:
    np_random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext = Extension(
        "supbounds._kernels",
        ["src/supbounds/_kernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[np_random_lib],
        libraries=["npyrandom", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
