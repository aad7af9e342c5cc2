# Minimal setup.py for compatibility
# All configuration is in pyproject.toml

from setuptools import setup

if __name__ == "__main__":
    setup()
