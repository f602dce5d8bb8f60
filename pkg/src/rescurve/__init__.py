"""Resilience and adaptability indices for performance series hit by successive disruptions."""

__version__ = "0.1.0"
