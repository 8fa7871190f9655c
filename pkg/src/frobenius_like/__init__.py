"""Exact verification of Frobenius-like structures attached to families of hyperplane arrangements."""

__version__ = "0.1.0"
