"""Dynamical-decoupling pulse sequences as explicit timelines.

A :class:`PulseSequence` is a list of segments; each segment is a free
evolution for ``interval`` microseconds followed by instantaneous pulses on
some qudits. Pulses landing on the same slot are simultaneous, i.e. their
tensor product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .hamiltonians import embed
from .heisenberg_weyl import HwLabel, hw_element, hw_labels, shift_op, shift_subgroup
from .tensor_core import InvariantError, Operator, expm_hermitian


@dataclass(frozen=True)
class Segment:
    interval: float
    pulses: Mapping[int, Operator] = field(default_factory=dict)


@dataclass(frozen=True)
class PulseSequence:
    register: tuple[int, ...]
    segments: tuple[Segment, ...]
    tau: float
    name: str = "custom"

    @property
    def total_duration(self) -> float:
        return float(sum(s.interval for s in self.segments))

    @property
    def pulse_count(self) -> int:
        """Number of single-qudit pulse applications."""
        return sum(len(s.pulses) for s in self.segments)

    def pulses_on(self, qudit: int) -> list[int]:
        """1-based slot numbers at which ``qudit`` is pulsed."""
        return [i + 1 for i, s in enumerate(self.segments) if qudit in s.pulses]

    @property
    def native_pulse_count(self) -> int:
        total = 0
        for seg in self.segments:
            for op in seg.pulses.values():
                factors = native_factors(op)
                total += 2 * len(factors) if factors is not None else 0
        return total

    def slot_unitary(self, index: int) -> np.ndarray:
        seg = self.segments[index]
        side = int(np.prod(self.register))
        out = np.eye(side, dtype=complex)
        for q, op in seg.pulses.items():
            out = embed(op, (q,), self.register) @ out
        return out

    def net_pulse_product(self) -> np.ndarray:
        side = int(np.prod(self.register))
        out = np.eye(side, dtype=complex)
        for i in range(len(self.segments)):
            out = self.slot_unitary(i) @ out
        return out

    def repeated(self, reps: int) -> PulseSequence:
        return PulseSequence(self.register, self.segments * reps, self.tau, self.name)

    def with_tau(self, tau: float) -> PulseSequence:
        """Rescale every interval so the base interval becomes ``tau``."""
        f = tau / self.tau
        segs = tuple(Segment(s.interval * f, s.pulses) for s in self.segments)
        return PulseSequence(self.register, segs, tau, self.name)

    def to_json(self) -> dict:
        def enc(op: Operator):
            return [[[float(z.real), float(z.imag)] for z in row] for row in op.data]

        return {
            "name": self.name,
            "register": list(self.register),
            "tau_us": self.tau,
            "segments": [
                {"interval_us": s.interval, "pulses": {str(q): enc(op) for q, op in sorted(s.pulses.items())}}
                for s in self.segments
            ],
            "metadata": {
                "total_us": self.total_duration,
                "pulse_count": self.pulse_count,
                "native_pulse_count": self.native_pulse_count,
            },
        }


def _proportional_to_identity(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m - m[0, 0] * np.eye(m.shape[0]))) <= tol)


def is_cyclic(seq: PulseSequence, tol: float = 1e-10) -> bool:
    prod = seq.net_pulse_product()
    return _proportional_to_identity(prod, tol) and abs(abs(prod[0, 0]) - 1) <= tol


# ----------------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------------


def cycle_sequence(group: Sequence[Operator], tau: float, name: str = "cycle") -> PulseSequence:
    """Timeline for prod_j g_j^dag f_tau g_j over a single-qudit group.

    With g_0 = I the pulses after each interval are g_1 g_0^dag, g_2 g_1^dag,
    ..., and finally g_K^dag. Pulses proportional to the identity are dropped.
    """
    if not group:
        raise ValueError("decoupling group is empty")
    d = group[0].side
    for g in group:
        if g.side != d:
            raise ValueError("group elements have different dimensions")
        if not g.is_unitary():
            raise InvariantError("decoupling group element is not unitary")
    if not _proportional_to_identity(group[0].data):
        raise ValueError("group[0] must be the identity")
    segments = []
    for j, g in enumerate(group):
        pulse = group[j + 1].data @ g.data.conj().T if j + 1 < len(group) else g.data.conj().T
        pulses = {} if _proportional_to_identity(pulse) else {0: Operator(pulse)}
        segments.append(Segment(tau, pulses))
    return PulseSequence((d,), tuple(segments), tau, name)


def dxd_sequence(d: int, tau: float, reps: int = 1) -> PulseSequence:
    """d equidistant X_d pulses per repetition: X f X f ... X f."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    x = shift_op(d)
    seg = Segment(tau, {0: x})
    return PulseSequence((d,), (seg,) * (d * reps), tau, f"dxd{reps}" if reps > 1 else "dxd")


def universal_sequence(d: int, tau: float, order: Sequence[HwLabel] | None = None) -> PulseSequence:
    """Cycle over all d**2 HW elements (lexicographic order unless given)."""
    labels = list(order) if order is not None else hw_labels(d)
    if sorted(labels) != sorted(hw_labels(d)) or labels[0] != HwLabel(0, 0, d):
        raise ValueError("order must be a permutation of the HW labels starting at (0,0)")
    return cycle_sequence([hw_element(l) for l in labels], tau, name="universal")


def ckdd_sequence(d: int, tau: float) -> PulseSequence:
    """Staggered two-qudit sequence: X_d on qudit 0 every interval, on qudit 1 every d-th."""
    x = shift_op(d)
    segments = []
    for slot in range(1, d * d + 1):
        pulses = {0: x}
        if slot % d == 0:
            pulses[1] = x
        segments.append(Segment(tau, pulses))
    return PulseSequence((d, d), tuple(segments), tau, "ckdd")


def spectator_ckdd_sequence(d: int, tau: float) -> PulseSequence:
    """Three-qudit chain: spectators 0 and 2 pulsed every interval, middle qudit every d-th."""
    x = shift_op(d)
    segments = []
    for slot in range(1, d * d + 1):
        pulses = {0: x, 2: x}
        if slot % d == 0:
            pulses[1] = x
        segments.append(Segment(tau, dict(sorted(pulses.items()))))
    return PulseSequence((d, d, d), tuple(segments), tau, "spectator")


def simultaneous_sequence(d: int, tau: float) -> PulseSequence:
    """Negative control: X_d (x) X_d in lockstep after each of d intervals."""
    x = shift_op(d)
    segments = tuple(Segment(tau, {0: x, 1: x}) for _ in range(d))
    return PulseSequence((d, d), segments, tau, "simultaneous")


def free_sequence(register: Sequence[int], duration: float) -> PulseSequence:
    return PulseSequence(tuple(register), (Segment(duration, {}),), duration, "none")


def shift_cycle(d: int, tau: float) -> PulseSequence:
    """cycle_sequence over {I, X, ..., X^(d-1)}; same unitary as dxd_sequence(d, tau, 1)."""
    return cycle_sequence(shift_subgroup(d), tau, name="shift_cycle")


BUILDERS: dict[str, Callable[..., PulseSequence]] = {
    "dxd": dxd_sequence,
    "universal": universal_sequence,
    "ckdd": ckdd_sequence,
    "spectator": spectator_ckdd_sequence,
    "simultaneous": simultaneous_sequence,
}

# intervals per repetition, as a function of d
INTERVALS = {
    "dxd": lambda d: d,
    "universal": lambda d: d * d,
    "ckdd": lambda d: d * d,
    "spectator": lambda d: d * d,
    "simultaneous": lambda d: d,
}


# ----------------------------------------------------------------------------
# Compilation into native two-level rotations
# ----------------------------------------------------------------------------


def subspace_x(i: int, j: int, d: int) -> Operator:
    """sigma^x on levels (i, j), identity elsewhere."""
    m = np.eye(d, dtype=complex)
    m[i, i] = m[j, j] = 0
    m[i, j] = m[j, i] = 1
    return Operator(m)


@dataclass(frozen=True)
class GateDecomposition:
    target: Operator
    factors: tuple[tuple[tuple[int, int], Operator], ...]
    native_pulse_count: int

    def product(self) -> np.ndarray:
        out = np.eye(self.target.side, dtype=complex)
        for _, op in self.factors:
            out = out @ op.data
        return out


def compile_shift(d: int) -> GateDecomposition:
    """X_d = sx(0,1) sx(1,2) ... sx(d-2,d-1), rightmost applied first.

    Each sigma^x costs two native sqrt(sigma^x) pulses.
    """
    factors = tuple(((i, i + 1), subspace_x(i, i + 1, d)) for i in range(d - 1))
    return GateDecomposition(shift_op(d), factors, 2 * len(factors))


def _shift_power(m: np.ndarray) -> int | None:
    """k if m = D X^k for a diagonal unitary D, else None."""
    d = m.shape[0]
    k = int(np.argmax(np.abs(m[:, 0])))
    perm = np.roll(np.eye(d), k, axis=0).astype(bool)
    if np.max(np.abs(m[~perm]), initial=0.0) > 1e-12:
        return None
    return k


def native_factors(op: Operator) -> list[tuple[int, int]] | None:
    """Two-level sigma^x factors (as level pairs) that realize ``op``.

    A pulse D X^k with diagonal D is compiled as min(k, d-k) copies of the
    shift decomposition (or of its inverse); the diagonal part is a virtual
    frame change and costs nothing. Returns None for non-monomial pulses.
    """
    d = op.side
    k = _shift_power(op.data)
    if k is None:
        return None
    levels = [(i, i + 1) for i in range(d - 1)]
    if k <= d - k:
        return levels * k
    return levels[::-1] * (d - k)


def apply_pulse_error(seq: PulseSequence, epsilon: float) -> PulseSequence:
    """Replace every pulse P by P exp(-i eps G_P), G_P = sum over native factors of sigma^x / 2."""
    if not abs(epsilon) < 0.2:
        raise ValueError(f"|epsilon| must be < 0.2, got {epsilon}")
    if epsilon == 0:
        return seq
    cache: dict[tuple[int, tuple], np.ndarray] = {}
    segments = []
    for seg in seq.segments:
        pulses = {}
        for q, op in seg.pulses.items():
            factors = native_factors(op)
            if factors is None:
                raise ValueError("pulse error can only be applied to ideal monomial pulses")
            key = (op.side, tuple(factors))
            if key not in cache:
                d = op.side
                gen = sum((subspace_x(i, j, d).data for i, j in factors), np.zeros((d, d), dtype=complex)) / 2
                cache[key] = expm_hermitian(Operator(gen), epsilon).data
            pulses[q] = Operator(op.data @ cache[key])
        segments.append(Segment(seg.interval, pulses))
    return PulseSequence(seq.register, tuple(segments), seq.tau, seq.name)


def build(name: str, d: int, tau: float, reps: int = 1, epsilon: float = 0.0) -> PulseSequence:
    """Look up a builder by name; ``reps`` repeats the base cycle."""
    if name not in BUILDERS:
        raise ValueError(f"unknown sequence name {name!r}; choose from {sorted(BUILDERS)}")
    if name == "dxd":
        seq = dxd_sequence(d, tau, reps)
    else:
        seq = BUILDERS[name](d, tau)
        if reps > 1:
            seq = seq.repeated(reps)
    return apply_pulse_error(seq, epsilon) if epsilon else seq
