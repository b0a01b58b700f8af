from setuptools import Extension, setup

# The compiled kernel is optional: without Cython the package installs in
# pure-Python mode and uwbmsdd._backend falls back to uwbmsdd._sdpy.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "uwbmsdd._sdkernel",
                ["src/uwbmsdd/_sdkernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
