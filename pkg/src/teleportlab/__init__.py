"""Numerical laboratory for imperfect teleportation of critical Ising chains."""

__version__ = "0.1.0"

from .state import DensityMatrix, Statevector, StateError, UnitVector3, MemoryLimitError  # noqa: E402
from .protocol import OutcomeString, ProtocolSpec  # noqa: E402

__all__ = [
    "DensityMatrix",
    "MemoryLimitError",
    "OutcomeString",
    "ProtocolSpec",
    "StateError",
    "Statevector",
    "UnitVector3",
    "__version__",
]
