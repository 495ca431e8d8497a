from setuptools import setup, find_packages

setup(
    name="aklt-hqmm",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pyyaml>=6.0",
        "jsonschema>=4.0",
    ],
    extras_require={
        "dev": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": ["aklt-hqmm=aklt_hqmm.cli:main"],
    },
)
