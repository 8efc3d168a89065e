"""First-order decoupling checks: commutant projections and infidelity scaling."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .hamiltonians import CrossKerrMatrix, cross_kerr_hamiltonian
from .heisenberg_weyl import HwExpansion, hw_expand, shift_subgroup
from .sequences import PulseSequence
from .simulator import evolve_sequence
from .tensor_core import Operator, identity, kron, unitary_infidelity

NOISE_FLOOR = 1e-13
CONTAMINATION_CEILING = 1e-1


def commutant_project(group: Sequence[Operator], omega: Operator) -> Operator:
    """Group average (1/|G|) sum_g g^dag omega g with g acting on the leading system factor.

    When ``omega`` is larger than the group elements, the remaining trailing
    factor is treated as a bath and left untouched.
    """
    if not group:
        raise ValueError("group is empty")
    g_side = group[0].side
    if omega.side % g_side:
        raise ValueError(f"group elements of side {g_side} do not fit operator of side {omega.side}")
    bath = omega.side // g_side
    total = np.zeros_like(omega.data)
    for g in group:
        if g.side != g_side:
            raise ValueError("group elements have different dimensions")
        gg = np.kron(g.data, np.eye(bath)) if bath > 1 else g.data
        total += gg.conj().T @ omega.data @ gg
    return Operator(total / len(group), omega.dims)


def tensor_group(left: Sequence[Operator], right: Sequence[Operator]) -> list[Operator]:
    return [kron(a, b) for a in left for b in right]


def lockstep_group(group: Sequence[Operator], n: int = 2) -> list[Operator]:
    """{g (x) g (x) ...} for g in group: every qudit pulsed together."""
    out = []
    for g in group:
        op = g
        for _ in range(n - 1):
            op = kron(op, g)
        out.append(op)
    return out


def ckdd_effective(ck: CrossKerrMatrix) -> tuple[float, float]:
    """Project H_CK under X-type groups on qudit 0 then on qudit 1.

    Returns ``(zeta00, residual)`` with ``residual = max|H'' - zeta00 I|``.
    """
    d = ck.d
    h = cross_kerr_hamiltonian(ck)
    sub = shift_subgroup(d)
    inner = [kron(g, identity(d)) for g in sub]
    outer = [kron(identity(d), g) for g in sub]
    h2 = commutant_project(outer, commutant_project(inner, h))
    zeta00 = ck.zeta00()
    residual = float(np.max(np.abs(h2.data - zeta00 * np.eye(d * d))))
    return zeta00, residual


def simultaneous_residual(ck: CrossKerrMatrix) -> HwExpansion:
    """HW expansion of H_CK projected under lockstep X-type pulses on both qudits."""
    h = cross_kerr_hamiltonian(ck)
    projected = commutant_project(lockstep_group(shift_subgroup(ck.d)), h)
    return hw_expand(projected, d=ck.d, n_qudits=2)


def system_identity_part(omega: Operator, d_sys: int) -> Operator:
    """I_S (x) Tr_S(omega)/d_S, the part of omega trivial on the system."""
    bath = omega.side // d_sys
    blocks = omega.data.reshape(d_sys, bath, d_sys, bath)
    hb = np.einsum("ibic->bc", blocks) / d_sys
    return Operator(np.kron(np.eye(d_sys), hb), omega.dims)


# ----------------------------------------------------------------------------
# Scaling
# ----------------------------------------------------------------------------


@dataclass
class ScalingResult:
    tau_values: list[float]
    infidelities: list[float]
    slope: float
    intercept: float
    r_squared: float
    used: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def scaling_fit(points: Sequence[tuple[float, float]]) -> ScalingResult:
    """Least-squares line through (log tau, log infidelity).

    Points outside (1e-13, 1e-1) are kept in the record but not fitted.
    """
    pts = sorted((float(t), float(f)) for t, f in points)
    taus = [t for t, _ in pts]
    infs = [f for _, f in pts]
    sel = [(t, f) for t, f in pts if t > 0 and NOISE_FLOOR < f < CONTAMINATION_CEILING]
    if len(sel) < 4:
        raise ValueError(f"need at least 4 points with infidelity in ({NOISE_FLOOR}, {CONTAMINATION_CEILING}), got {len(sel)}")
    x = np.log([t for t, _ in sel])
    y = np.log([f for _, f in sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingResult(taus, infs, float(slope), float(intercept), r2, len(sel))


def sequence_infidelity(h: Operator, seq: PulseSequence, phase_rate: float = 0.0) -> float:
    """Unitary infidelity of the sequence, after undoing a known exp(-i phase_rate T) phase."""
    u = evolve_sequence(h, seq)
    if phase_rate:
        u = np.exp(1j * phase_rate * seq.total_duration) * u
    return unitary_infidelity(u)


def scaling_sweep(
    h: Operator,
    builder: Callable[[float], PulseSequence],
    taus: Sequence[float],
    phase_rate: float = 0.0,
) -> list[tuple[float, float]]:
    return [(float(t), sequence_infidelity(h, builder(float(t)), phase_rate)) for t in sorted(taus)]


def effective_hamiltonian(u: Operator, total_time: float) -> Operator:
    """(i/T) log U on the principal branch of each eigenvalue."""
    evals, evecs = np.linalg.eig(u.data)
    angles = np.angle(evals)
    if np.max(np.abs(angles)) >= np.pi / 2:
        raise ValueError("eigenphases too large for an unambiguous logarithm; shorten T")
    h = evecs @ np.diag(-angles / total_time) @ np.linalg.inv(evecs)
    return Operator((h + h.conj().T) / 2, u.dims)


def auto_tau_window(
    h: Operator,
    builder: Callable[[float], PulseSequence],
    target: float = 1e-4,
    decades: float = 2.0,
    points: int = 9,
    phase_rate: float = 0.0,
    tau_start: float = 1e-6,
) -> np.ndarray:
    """Log-spaced taus ending where the infidelity first reaches ``target``.

    tau is doubled from ``tau_start`` until the infidelity crosses ``target``
    or the sequence leaves the perturbative regime (||H|| T > 1, where the
    infidelity starts to wrap around); the window then spans ``decades``
    below that point.
    """
    norm = float(np.linalg.norm(h.data, 2))
    if norm == 0:
        raise ValueError("zero Hamiltonian has no scaling window")
    tau = tau_start
    while sequence_infidelity(h, builder(2.0 * tau), phase_rate) < target:
        if norm * builder(4.0 * tau).total_duration > 1.0:
            break
        tau *= 2.0
    hi = np.log10(2.0 * tau)
    return np.logspace(hi - decades, hi, points)


@dataclass
class ScalingRun:
    d: int
    sequence: str
    result: ScalingResult


def scaling_hamiltonian(d: int, scale: float, bath_dim: int, seed: int) -> Operator:
    """Random all-HW Hamiltonian for a scaling sweep.

    With a quantum bath the pure-bath term is dropped: it survives every
    decoupling group and would otherwise dominate the infidelity at O(T^2).
    """
    from .hamiltonians import hw_sum, random_hw_coefficients
    from .heisenberg_weyl import HwLabel

    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(d),)))
    coeffs = random_hw_coefficients(d, bath_dim, scale, rng)
    if bath_dim > 1:
        coeffs[HwLabel(0, 0, d)] = np.zeros((bath_dim, bath_dim))
    return hw_sum(coeffs, d, bath_dim)


def run_scaling(
    dims: Sequence[int],
    scale: float = 1.0,
    bath_dim: int = 1,
    seed: int = 0,
    sequences: Sequence[str] = ("universal", "none"),
    taus: Sequence[float] | None = None,
    target: float = 1e-4,
    decades: float = 2.0,
    points: int = 9,
) -> list[ScalingRun]:
    """Infidelity-vs-tau sweeps for each dimension and sequence.

    ``"none"`` is free evolution over the same total time d^2 tau as the
    universal cycle. With ``taus=None`` each sweep gets an automatic window.
    """
    from .sequences import free_sequence, universal_sequence, dxd_sequence

    runs = []
    for d in dims:
        h = scaling_hamiltonian(d, scale, bath_dim, seed)
        for name in sequences:
            if name == "universal":
                builder = lambda t, d=d: universal_sequence(d, t)  # noqa: E731
            elif name == "dxd":
                builder = lambda t, d=d: dxd_sequence(d, t)  # noqa: E731
            elif name == "none":
                builder = lambda t, d=d: free_sequence((d,), d * d * t)  # noqa: E731
            else:
                raise ValueError(f"unsupported scaling sequence {name!r}")
            window = taus if taus is not None else auto_tau_window(h, builder, target, decades, points)
            runs.append(ScalingRun(d, name, scaling_fit(scaling_sweep(h, builder, window))))
    return runs
