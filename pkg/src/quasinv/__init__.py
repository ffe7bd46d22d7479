"""Numerical laboratory for quasi-invariant states under finite group actions on M_n."""
__version__ = "0.1.0"
