"""Rigorous-numerics laboratory for robust and removable non-computability."""

__version__ = "0.1.0"
