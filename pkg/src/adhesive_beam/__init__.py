"""Spectral simulation of a beam with breakable adhesion."""

__version__ = "0.1.0"
