"""Boson sampling with noninteracting walkers on one-dimensional lattices."""

__version__ = "0.1.0"
