"""Exact computer algebra for complete differential graded Lie algebras."""

__version__ = "0.1.0"
