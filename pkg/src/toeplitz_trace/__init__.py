"""Trace identities for Toeplitz operators, computed from both the operator and the symbol side."""

__version__ = "0.1.0"
