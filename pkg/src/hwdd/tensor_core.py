"""Dense complex linear algebra for small multi-qudit registers.

Everything here works on plain numpy arrays wrapped in :class:`Operator` /
:class:`StateVector`, which only add subsystem-dimension bookkeeping. Total
Hilbert-space dimensions in this package stay below a few hundred, so all
storage is dense.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


class InvariantError(ValueError):
    """A numerical invariant (unitarity, Hermiticity, trace) was violated."""


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix with subsystem dimensions.

    ``dims`` lists the subsystem dimensions in tensor order; their product is
    the matrix side length.
    """

    data: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, data, dims: Sequence[int] | None = None):
        arr = np.array(data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {arr.shape}")
        dims = (arr.shape[0],) if dims is None else tuple(int(x) for x in dims)
        if int(np.prod(dims)) != arr.shape[0]:
            raise ValueError(f"dims {dims} do not multiply to side length {arr.shape[0]}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dims", dims)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    def dag(self) -> Operator:
        return Operator(self.data.conj().T, self.dims)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        eye = np.eye(self.side)
        return bool(np.max(np.abs(self.data.conj().T @ self.data - eye)) <= tol)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def __matmul__(self, other: Operator) -> Operator:
        if self.side != other.side:
            raise ValueError(f"dimension mismatch: {self.side} vs {other.side}")
        return Operator(self.data @ other.data, self.dims)

    def __add__(self, other: Operator) -> Operator:
        if self.side != other.side:
            raise ValueError(f"dimension mismatch: {self.side} vs {other.side}")
        return Operator(self.data + other.data, self.dims)

    def __sub__(self, other: Operator) -> Operator:
        return self + (-1.0) * other

    def __mul__(self, scalar) -> Operator:
        return Operator(complex(scalar) * self.data, self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> Operator:
        return (-1.0) * self

    def __repr__(self) -> str:
        return f"Operator(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims: Sequence[int] | None = None, normalize: bool = False):
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            vec = vec / np.linalg.norm(vec)
        elif abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise ValueError("state vector is not normalized")
        dims = (vec.size,) if dims is None else tuple(int(x) for x in dims)
        if int(np.prod(dims)) != vec.size:
            raise ValueError(f"dims {dims} do not multiply to length {vec.size}")
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        object.__setattr__(self, "dims", dims)

    def projector(self) -> Operator:
        return Operator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


def identity(dims: int | Sequence[int]) -> Operator:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    return Operator(np.eye(int(np.prod(dims))), dims)


def kron(a: Operator, b: Operator) -> Operator:
    return Operator(np.kron(a.data, b.data), a.dims + b.dims)


def kron_all(ops: Iterable[Operator]) -> Operator:
    return reduce(kron, ops)


def expm_hermitian(h: Operator, t: float) -> Operator:
    """Return ``exp(-i t h)`` for Hermitian ``h`` via its eigendecomposition."""
    if not h.is_hermitian():
        raise InvariantError("expm_hermitian requires a Hermitian generator")
    evals, evecs = np.linalg.eigh(h.data)
    return Operator((evecs * np.exp(-1j * t * evals)) @ evecs.conj().T, h.dims)


def partial_trace(rho: Operator, keep: Sequence[int]) -> Operator:
    """Trace out every subsystem of ``rho`` not listed in ``keep``."""
    n = len(rho.dims)
    keep = sorted(int(k) for k in keep)
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    traced = [k for k in range(n) if k not in keep]
    tensor = rho.data.reshape(rho.dims + rho.dims)
    # trace highest axes first so lower axis numbers stay valid
    for count, k in enumerate(sorted(traced, reverse=True)):
        m = n - count
        tensor = np.trace(tensor, axis1=k, axis2=k + m)
    kept_dims = tuple(rho.dims[k] for k in keep)
    side = int(np.prod(kept_dims)) if kept_dims else 1
    return Operator(tensor.reshape(side, side), kept_dims or (1,))


def state_fidelity(rho: Operator, psi: StateVector) -> float:
    """Fidelity ``<psi|rho|psi>`` of a density matrix with a pure state."""
    if rho.side != psi.amplitudes.size:
        raise ValueError(f"dimension mismatch: rho side {rho.side}, state length {psi.amplitudes.size}")
    v = psi.amplitudes
    return float(np.real(v.conj() @ rho.data @ v))


def unitary_infidelity(u: Operator) -> float:
    """Global-phase invariant distance ``1 - |Tr(u)/D|^2`` from the identity."""
    overlap = np.trace(u.data) / u.side
    return float(max(0.0, 1.0 - abs(overlap) ** 2))


def check_unitary(u: Operator, what: str = "evolution") -> Operator:
    if not u.is_unitary():
        err = np.max(np.abs(u.data.conj().T @ u.data - np.eye(u.side)))
        raise InvariantError(f"{what} is not unitary (max deviation {err:.3e})")
    return u
