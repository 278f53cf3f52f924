"""Position-based quantum cryptography simulator."""

__version__ = "0.1.0"
