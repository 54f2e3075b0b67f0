"""Quantum-kernel SVM and variational quantum classifier on a statevector simulator."""
from ._backend import NAME as BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
