"""Certified computation of Feigenbaum's fixed point g and the constant alpha = 1/g(1)."""

__version__ = "0.1.0"
