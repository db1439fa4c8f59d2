"""MZ displacement, POVM, uncertainty, and CHSH numerics."""

__version__ = "0.1.0"
