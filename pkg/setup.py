import codecs
import os

from setuptools import setup, find_packages

with codecs.open("README.md", encoding="utf-8") as f:
    README = f.read()


def get_version_file_path():
    github_actions_path = "/home/runner/work/muondemur/muondemur"
    if os.path.isfile(github_actions_path + "/version"):
        return github_actions_path + "/version"
    else:
        return "version"


setup(
    name="muondemur",
    version=open(get_version_file_path()).read().strip(),
    description="Muonium spin dynamics simulator and fitting toolkit for double electron-muon"
    " resonance (DEMUR) experiments, driven by experiment definitions written in YAML",
    long_description=README,
    long_description_content_type="text/markdown",
    url="https://github.com/muondemur/muondemur",
    author="muondemur contributors",
    keywords=["muon", "muonium", "musr", "spin-dynamics", "magnetic-resonance"],
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: POSIX :: Linux",
        "Operating System :: MacOS",
        "Operating System :: Microsoft :: Windows",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"muondemur": ["recipes/*.yml"]},
    python_requires=">=3.9",
    install_requires=[
        "PyYAML==6.0.1",
        "cli-ui==0.17.2",
        "mergedeep==1.3.4",
        "pydantic==2.5.3",
        "numpy==1.26.4",
        "scipy==1.11.4",
        "iminuit==2.25.2",
        "joblib==1.3.2",
    ],
    extras_require={
        "test": [
            "pytest==7.4.4",
            "pre-commit==3.6.0",  # not really for tests, but for development
            "coverage==7.4.0",
            "pytest-cov==4.1.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "muondemur=muondemur.run:run",
        ],
    },
)
