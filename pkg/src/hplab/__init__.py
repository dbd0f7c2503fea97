"""Wavenumber-explicit verification toolkit for the Helmholtz equation on a disk."""

from .context import WaveContext
from .errors import HplabError, NumericalError, ValidationError

__all__ = ["WaveContext", "HplabError", "NumericalError", "ValidationError"]
__version__ = "0.1.0"
