"""Numerical kernel functions of finitely connected planar domains."""

__version__ = "0.1.0"
