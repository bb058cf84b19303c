"""Classically simulated quantum-search motion planning."""

from .exceptions import QMPError

__version__ = "0.1.0"
__all__ = ["QMPError", "__version__"]
