"""Numerical laboratory for translation-commuting operators on L^2(R^n, dp/E)."""

__version__ = "0.1.0"
