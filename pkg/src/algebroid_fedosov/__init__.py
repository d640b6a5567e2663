"""Exact Fedosov-type star products on the dual of a Lie algebroid."""

__version__ = "0.1.0"
