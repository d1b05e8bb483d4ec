"""Pseudospherical-surface equations: generation, verification, numerics and immersion."""

__version__ = "0.1.0"
