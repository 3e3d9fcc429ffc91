"""Instance generation, exact evaluation, simulation and attacks for IQP-based
verifiable quantum advantage with hidden stabilizer codes."""

from .f2linalg import BitMatrix, BitVector

__all__ = ["BitMatrix", "BitVector"]
__version__ = "0.1.0"
