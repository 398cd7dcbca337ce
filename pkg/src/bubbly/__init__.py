"""Solvers and verifiers for rational-bubble equilibrium models."""
from bubbly.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
