"""Probing harness for context utilization in document-level machine translation."""

__version__ = "0.1.0"
