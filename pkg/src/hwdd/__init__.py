"""Dynamical decoupling for qudits built on the Heisenberg-Weyl group."""
__version__ = "0.1.0"

from .tensor_core import InvariantError, Operator, StateVector  # noqa: E402

__all__ = ["__version__", "InvariantError", "Operator", "StateVector"]
