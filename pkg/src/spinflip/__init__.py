"""Numerics for fast bit-flipping in a pair of coupled spins."""

__version__ = "0.1.0"
