"""Test suite package to give mypy stable module names."""
