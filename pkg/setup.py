from setuptools import find_packages, setup

with open("requirements.txt", encoding="utf-8") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="deepteam",
    version="0.1.0",
    description="Solver and simulator for deep structured teams",
    packages=find_packages(exclude=("tests", "tests.*", "examples", "examples.*")),
    install_requires=[r for r in requirements if not r.startswith("pytest")],
    extras_require={"test": [r for r in requirements if r.startswith("pytest")]},
    python_requires=">=3.11",
    entry_points={"console_scripts": ["deepteam=deepteam.main:main"]},
)
