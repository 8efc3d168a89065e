"""Heisenberg-Weyl (generalized Pauli) group for a single qudit of any dimension.

Elements are labelled by ``(alpha, beta)`` in Z_d x Z_d::

    Lambda_{alpha beta} = (-sqrt(gamma))^(alpha*beta) X^alpha Z^beta,   gamma = exp(2 pi i / d)

with the principal root sqrt(gamma) = exp(i pi / d), so the prefactor is
exp(i pi alpha beta (d + 1) / d).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .tensor_core import Operator, kron_all


class HwLabel(NamedTuple):
    alpha: int
    beta: int
    d: int

    def validate(self) -> "HwLabel":
        if self.d < 2:
            raise ValueError(f"dimension d must be >= 2, got {self.d}")
        if not (0 <= self.alpha < self.d and 0 <= self.beta < self.d):
            raise ValueError(f"label ({self.alpha}, {self.beta}) outside Z_{self.d}")
        return self

    def __str__(self) -> str:
        return f"({self.alpha},{self.beta})"


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension d must be an integer >= 2, got {d}")
    return int(d)


_QUARTER_TURNS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def _unit_phase(m: int, period: int) -> complex:
    """exp(2 pi i m / period), exact at multiples of a quarter turn."""
    m %= period
    if (4 * m) % period == 0:
        return _QUARTER_TURNS[4 * m // period]
    return complex(np.exp(2j * np.pi * m / period))


def root_of_unity(d: int, k: int = 1) -> complex:
    """gamma_d ** k with the exponent reduced mod d first."""
    return _unit_phase(k, d)


def shift_op(d: int) -> Operator:
    d = _check_dim(d)
    return Operator(np.roll(np.eye(d), 1, axis=0))


def phase_op(d: int) -> Operator:
    d = _check_dim(d)
    return Operator(np.diag([root_of_unity(d, k) for k in range(d)]))


def _prefactor(alpha: int, beta: int, d: int) -> complex:
    # (-sqrt(gamma))^(ab) = exp(i pi ab (d+1)/d); period 2d in ab
    return _unit_phase(alpha * beta * (d + 1), 2 * d)


def hw_matrix(alpha: int, beta: int, d: int) -> np.ndarray:
    """Raw array for Lambda_{alpha beta}; built directly as a monomial matrix."""
    out = np.zeros((d, d), dtype=complex)
    pref = _prefactor(alpha, beta, d)
    for k in range(d):
        # X^a Z^b |k> = gamma^(b k) |k + a>
        out[(k + alpha) % d, k] = pref * root_of_unity(d, beta * k)
    return out


def hw_element(label: HwLabel) -> Operator:
    label.validate()
    return Operator(hw_matrix(label.alpha, label.beta, label.d))


def hw_labels(d: int) -> list[HwLabel]:
    """All d**2 labels in lexicographic (alpha, beta) order."""
    d = _check_dim(d)
    return [HwLabel(a, b, d) for a in range(d) for b in range(d)]


def hw_group(d: int) -> list[Operator]:
    return [hw_element(lab) for lab in hw_labels(d)]


def shift_subgroup(d: int) -> list[Operator]:
    """The order-d subgroup {I, X, ..., X^(d-1)} that decouples pure dephasing."""
    return [hw_element(HwLabel(a, 0, d)) for a in range(_check_dim(d))]


def commutation_phase(a: HwLabel, b: HwLabel) -> complex:
    """Phase c with Lambda_a Lambda_b = c Lambda_b Lambda_a, i.e. gamma^(beta mu - alpha nu)."""
    if a.d != b.d:
        raise ValueError(f"labels live in different dimensions: {a.d} vs {b.d}")
    return root_of_unity(a.d, a.beta * b.alpha - a.alpha * b.beta)


def conjugation_phase(a: HwLabel, b: HwLabel) -> complex:
    """Phase c with Lambda_a^dag Lambda_b Lambda_a = c Lambda_b, i.e. gamma^(alpha nu - beta mu)."""
    if a.d != b.d:
        raise ValueError(f"labels live in different dimensions: {a.d} vs {b.d}")
    return root_of_unity(a.d, a.alpha * b.beta - a.beta * b.alpha)


def adjoint_partner(label: HwLabel) -> tuple[HwLabel, complex]:
    """Return ``(p, phi)`` such that ``Lambda_label^dag = phi * Lambda_p``."""
    d = label.d
    p = HwLabel((-label.alpha) % d, (-label.beta) % d, d)
    phi = np.trace(hw_matrix(p.alpha, p.beta, d).conj().T @ hw_matrix(label.alpha, label.beta, d).conj().T) / d
    return p, complex(phi)


def roots_of_unity_sum(d: int, k: int = 1) -> complex:
    return complex(sum(root_of_unity(d, k * j) for j in range(d)))


def f_lemma(mu: int, nu: int, d: int) -> complex:
    """Sum over alpha, beta in {0..d^2-1} of gamma^(alpha nu - beta mu)."""
    n = d * d
    return complex(sum(root_of_unity(d, a * nu - b * mu) for a in range(n) for b in range(n)))


# ----------------------------------------------------------------------------
# Operator-basis expansion
# ----------------------------------------------------------------------------

ExpansionKey = HwLabel | tuple[HwLabel, ...]


@dataclass
class HwExpansion:
    """Coefficients of an operator in the (tensor-product) HW basis.

    For a single system qudit the keys are :class:`HwLabel`; for ``n`` qudits
    they are ``n``-tuples of labels. Values are complex scalars when
    ``bath_dim == 1`` and ``bath_dim x bath_dim`` arrays otherwise.
    """

    d: int
    n_qudits: int = 1
    bath_dim: int = 1
    coefficients: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.coefficients[key]

    def get(self, key, default=0.0):
        return self.coefficients.get(key, default)

    def keys(self):
        return self.coefficients.keys()

    def items(self):
        return self.coefficients.items()

    def nonzero(self, tol: float = 1e-12) -> dict:
        return {k: v for k, v in self.coefficients.items() if np.max(np.abs(v)) > tol}

    def basis_element(self, key) -> np.ndarray:
        labels = (key,) if self.n_qudits == 1 else key
        return kron_all(Operator(hw_matrix(l.alpha, l.beta, l.d)) for l in labels).data

    def to_operator(self) -> Operator:
        side = self.d**self.n_qudits
        out = np.zeros((side * self.bath_dim,) * 2, dtype=complex)
        for key, coef in self.coefficients.items():
            out += np.kron(self.basis_element(key), np.atleast_2d(coef))
        dims = (self.d,) * self.n_qudits + ((self.bath_dim,) if self.bath_dim > 1 else ())
        return Operator(out, dims)


def _expansion_keys(d: int, n: int) -> Iterator[ExpansionKey]:
    if n == 1:
        yield from hw_labels(d)
    else:
        yield from itertools.product(hw_labels(d), repeat=n)


def hw_expand(m: Operator | np.ndarray, d: int | None = None, n_qudits: int = 1, bath_dim: int = 1) -> HwExpansion:
    """Hilbert-Schmidt expansion ``m = sum_l Lambda_l (x) B_l``.

    ``B_l = Tr_S[(Lambda_l^dag (x) I) m] / d**n``; with ``bath_dim == 1`` these
    are the scalar coefficients ``Tr(Lambda_l^dag m) / d**n``.
    """
    data = m.data if isinstance(m, Operator) else np.asarray(m, dtype=complex)
    if d is None:
        if n_qudits != 1 or bath_dim != 1:
            raise ValueError("d must be given for multi-qudit or bath expansions")
        d = data.shape[0]
    d = _check_dim(d)
    sys_side = d**n_qudits
    if data.shape != (sys_side * bath_dim,) * 2:
        raise ValueError(f"operator shape {data.shape} incompatible with d={d}, n={n_qudits}, bath_dim={bath_dim}")
    blocks = data.reshape(sys_side, bath_dim, sys_side, bath_dim)
    exp = HwExpansion(d=d, n_qudits=n_qudits, bath_dim=bath_dim)
    for key in _expansion_keys(d, n_qudits):
        basis = exp.basis_element(key)
        # Tr_S[(L^dag (x) I) m]_{b b'} = sum_{ij} conj(L_ji) m_{(j b),(i b')}
        coef = np.einsum("ji,jbic->bc", basis.conj(), blocks) / sys_side
        exp.coefficients[key] = complex(coef[0, 0]) if bath_dim == 1 else coef
    return exp


def expand_diagonal_projector(i: int, d: int) -> np.ndarray:
    """Coefficients c_k with |i><i| = sum_k c_k Z^k, c_k = gamma^(-ik) / d."""
    d = _check_dim(d)
    if not 0 <= i < d:
        raise ValueError(f"level index {i} out of range for d={d}")
    return np.array([root_of_unity(d, -i * k) / d for k in range(d)])
