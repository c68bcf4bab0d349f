"""Surrogate-assisted non-gradient topology optimization toolkit."""

__version__ = "0.1.0"
