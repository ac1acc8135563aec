"""Discrete moments of zeta derivatives over the nontrivial zeros."""

__version__ = "0.1.0"
