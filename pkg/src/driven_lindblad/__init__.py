"""Driven open-qubit master equations."""

__version__ = "0.1.0"
