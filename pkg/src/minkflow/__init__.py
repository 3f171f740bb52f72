"""Numerical laboratory for translating solitons of the sigma_k^{1/k} flow in Minkowski space."""

__version__ = "0.1.0"
