"""Exponent geometry and numerical experiments for inhomogeneous Strichartz estimates."""

__version__ = "0.1.0"
