"""Exact and numerical tools for polynomial lump solutions of the Boussinesq/KP-I hierarchy."""

__version__ = "0.1.0"
