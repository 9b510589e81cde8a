#!/usr/bin/env python

"""simlab setup."""
from pathlib import Path
from setuptools import setup

VERSION = "0.3.0"

setup(
    name="simlab",
    version=VERSION,
    description="Robust minimum divergence estimation and Monte Carlo simulation studies",
    long_description=Path("README.md").read_text(),
    long_description_content_type="text/markdown",
    license="MIT",
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "python-configuration",
        "pyyaml",
    ],
    extras_require={
        "test": ["pytest"],
    },
    zip_safe=True,
)
