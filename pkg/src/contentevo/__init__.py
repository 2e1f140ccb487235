"""Stochastic models of relational content evolution and replica refresh policies."""

__version__ = "0.1.0"
