"""Attributes used by docs / packaging."""

__version__ = "0.3.0"
