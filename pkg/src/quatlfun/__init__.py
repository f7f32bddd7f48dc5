"""Quaternionic ingredients for balanced triple-product p-adic L-values."""

__version__ = "0.1.0"
