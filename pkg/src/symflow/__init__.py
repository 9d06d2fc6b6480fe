"""Lie-symmetry toolkit for u_t + u^k u_x + lambda u^m = 0."""

__version__ = "0.1.0"
