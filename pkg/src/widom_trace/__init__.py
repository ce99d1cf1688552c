"""Widom-type trace coefficients for Wiener-Hopf operators."""

__version__ = "0.1.0"
