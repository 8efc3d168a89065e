"""Hot loops for ensemble simulation.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``HWDD_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is selected. ``projector_expectation`` is a single
batched matmul and always runs in numpy; a compiled loop was slower.
"""
import os

from . import _pykernel

_force_python = os.environ.get("HWDD_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend requested")
    from . import _ckernel as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernel
    BACKEND = "python"

evolve_diagonal_batch = _impl.evolve_diagonal_batch
projector_expectation = _pykernel.projector_expectation

__all__ = ["BACKEND", "evolve_diagonal_batch", "projector_expectation"]
