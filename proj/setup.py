import os
from glob import glob

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("NPY_NUM_BUILD_JOBS", default=4).install()

eigen = next(
    (
        p
        for p in ("/usr/include/eigen3", "/usr/local/include/eigen3")
        if os.path.isdir(p)
    ),
    None,
)
include_dirs = ["include", "vendor"] + ([eigen] if eigen else [])

ext = Pybind11Extension(
    "cookiewalk._core",
    sorted(glob("src/*.cpp")) + ["bindings/pymodule.cpp"],
    include_dirs=include_dirs,
    cxx_std=20,
    extra_compile_args=["-O2"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
