"""figseek: figure metadata extraction, map classification, and map search."""

__version__ = "0.1.0"
