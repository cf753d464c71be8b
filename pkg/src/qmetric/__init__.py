"""Numerical quantum metric geometry at finite dimension."""

__version__ = "0.1.0"
