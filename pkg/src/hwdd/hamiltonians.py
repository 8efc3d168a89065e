"""Noise Hamiltonians: qudit dephasing, two-qudit cross-Kerr, random HW baths.

Units: angular frequency in rad/us, time in us. Rates tabulated in MHz are
multiplied by 2*pi when loaded.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .heisenberg_weyl import HwLabel, adjoint_partner, hw_labels, hw_matrix, root_of_unity
from .tensor_core import Operator

_SIZE_NAMES = {3: "qutrit", 4: "ququart"}


@dataclass(frozen=True, eq=False)
class CrossKerrMatrix:
    """Cross-Kerr rates alpha[i-1, j-1] = alpha_ij (rad/us) for i, j in 1..d-1."""

    d: int
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.shape != (self.d - 1, self.d - 1):
            raise ValueError(f"cross-Kerr matrix for d={self.d} must be {(self.d - 1,) * 2}, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def from_mhz(cls, d: int, rates: Mapping[str, float] | np.ndarray) -> CrossKerrMatrix:
        """Build from cyclic rates in MHz, given as a matrix or an ``{"i,j": value}`` map."""
        if isinstance(rates, Mapping):
            a = np.zeros((d - 1, d - 1))
            for key, val in rates.items():
                i, j = (int(x) for x in str(key).split(","))
                if not (1 <= i < d and 1 <= j < d):
                    raise ValueError(f"cross-Kerr index {key!r} outside 1..{d - 1}")
                a[i - 1, j - 1] = val
        else:
            a = np.asarray(rates, dtype=float)
        return cls(d, 2 * np.pi * a)

    @classmethod
    def zero(cls, d: int) -> CrossKerrMatrix:
        return cls(d, np.zeros((d - 1, d - 1)))

    def zeta(self) -> np.ndarray:
        """Coefficients zeta_kl of H_CK = sum_kl zeta_kl Z^k (x) Z^l."""
        d = self.d
        out = np.zeros((d, d), dtype=complex)
        for k in range(d):
            for l in range(d):
                out[k, l] = sum(
                    root_of_unity(d, -(i * k + j * l)) * self.alpha[i - 1, j - 1]
                    for i in range(1, d)
                    for j in range(1, d)
                ) / d**2
        return out

    def zeta00(self) -> float:
        return float(self.alpha.sum()) / self.d**2


def data_path() -> Path:
    override = os.environ.get("HWDD_DATA")
    if override:
        return Path(override)
    return Path(str(resources.files("hwdd") / "data" / "device_rates.json"))


def load_device_rates(path: str | os.PathLike | None = None) -> dict:
    path = Path(path) if path is not None else data_path()
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise FileNotFoundError(f"cannot read device rate table {path}: {exc}") from exc


def device_cross_kerr(pair: str, d: int, table: dict | None = None) -> CrossKerrMatrix:
    """Look up a measured cross-Kerr matrix, e.g. ``device_cross_kerr("Q2-Q3", 3)``."""
    table = load_device_rates() if table is None else table
    size = _SIZE_NAMES.get(d)
    try:
        rates = table[size][pair]
    except KeyError:
        raise KeyError(f"no cross-Kerr data for pair {pair!r} at d={d}") from None
    return CrossKerrMatrix.from_mhz(d, rates)


# ----------------------------------------------------------------------------
# Hamiltonian builders
# ----------------------------------------------------------------------------


def dephasing_diagonal(d: int, b: Sequence[complex]) -> np.ndarray:
    """Real diagonal of sum_nu b_nu Z^nu (b indexed nu = 1..d-1)."""
    b = np.asarray(b, dtype=complex)
    if b.shape != (d - 1,):
        raise ValueError(f"dephasing coefficients for d={d} need length {d - 1}, got {b.shape}")
    for nu in range(1, d):
        partner = d - nu
        if abs(b[partner - 1] - np.conj(b[nu - 1])) > 1e-12:
            raise ValueError(
                f"dephasing coefficients violate Hermiticity: b[{partner}] must equal conj(b[{nu}])"
            )
    k = np.arange(d)
    diag = np.zeros(d, dtype=complex)
    for nu in range(1, d):
        diag += b[nu - 1] * np.exp(2j * np.pi * ((nu * k) % d) / d)
    return diag.real


def dephasing_hamiltonian(d: int, b: Sequence[complex]) -> Operator:
    return Operator(np.diag(dephasing_diagonal(d, b)))


def cross_kerr_diagonal(ck: CrossKerrMatrix) -> np.ndarray:
    d = ck.d
    diag = np.zeros((d, d))
    diag[1:, 1:] = ck.alpha
    return diag.reshape(-1)


def cross_kerr_hamiltonian(ck: CrossKerrMatrix) -> Operator:
    return Operator(np.diag(cross_kerr_diagonal(ck)), (ck.d, ck.d))


def random_hw_coefficients(
    d: int, bath_dim: int, scale: float, seed: int | np.random.Generator
) -> dict[HwLabel, np.ndarray]:
    """Sample bath operators B_l so that sum_l Lambda_l (x) B_l is Hermitian.

    One label of each adjoint pair gets independent complex Gaussian entries
    (std ``scale`` per entry); its partner is fixed by the pairing
    ``B_p = phi * B_l^dag`` where ``Lambda_l^dag = phi * Lambda_p``.
    """
    if bath_dim < 1:
        raise ValueError(f"bath_dim must be >= 1, got {bath_dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    coeffs: dict[HwLabel, np.ndarray] = {}
    for lab in hw_labels(d):
        if lab in coeffs:
            continue
        partner, phi = adjoint_partner(lab)
        shape = (bath_dim, bath_dim)
        a = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        if partner == lab:
            coeffs[lab] = (a + phi * a.conj().T) / 2
        else:
            coeffs[lab] = a
            coeffs[partner] = phi * a.conj().T
    return coeffs


def hw_sum(coeffs: Mapping[HwLabel, np.ndarray], d: int, bath_dim: int) -> Operator:
    out = np.zeros((d * bath_dim,) * 2, dtype=complex)
    for lab, b in coeffs.items():
        out += np.kron(hw_matrix(lab.alpha, lab.beta, d), np.atleast_2d(b))
    out = (out + out.conj().T) / 2  # clears rounding-level anti-Hermitian residue
    dims = (d, bath_dim) if bath_dim > 1 else (d,)
    return Operator(out, dims)


def random_hw_hamiltonian(d: int, bath_dim: int, scale: float, seed: int | np.random.Generator) -> Operator:
    """Random system-bath Hamiltonian containing every HW operator; bath_dim=1 is a classical bath."""
    return hw_sum(random_hw_coefficients(d, bath_dim, scale, seed), d, bath_dim)


def embed(op: Operator | np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Embed ``op`` acting on subsystems ``targets`` (in that order) into the full register."""
    dims = tuple(dims)
    targets = tuple(targets)
    data = op.data if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if len(set(targets)) != len(targets) or any(t < 0 or t >= len(dims) for t in targets):
        raise ValueError(f"invalid target slots {targets} for register {dims}")
    sub = int(np.prod([dims[t] for t in targets]))
    if data.shape != (sub, sub):
        raise ValueError(f"operator of side {data.shape[0]} does not fit slots {targets} of register {dims}")
    rest = [k for k in range(len(dims)) if k not in targets]
    order = list(targets) + rest
    full = np.kron(data, np.eye(int(np.prod([dims[k] for k in rest]))))
    n = len(dims)
    perm_dims = [dims[k] for k in order]
    tensor = full.reshape(perm_dims + perm_dims)
    inv = np.argsort(order)
    tensor = tensor.transpose(list(inv) + [n + i for i in inv])
    side = int(np.prod(dims))
    return tensor.reshape(side, side)


def compose_register(dims: Sequence[int], parts: Sequence[tuple[Sequence[int], Operator]]) -> Operator:
    """Sum of ``parts``, each embedded with identities on the untouched slots."""
    side = int(np.prod(dims))
    total = np.zeros((side, side), dtype=complex)
    for targets, op in parts:
        expected = tuple(dims[t] for t in targets)
        if isinstance(op, Operator) and len(op.dims) == len(expected) and op.dims != expected:
            raise ValueError(f"part dims {op.dims} do not match register slots {expected}")
        total += embed(op, targets, dims)
    return Operator(total, dims)


def embed_diagonal(diag: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Diagonal-only version of :func:`embed`; returns the full-register diagonal."""
    dims = tuple(dims)
    shape = [1] * len(dims)
    sub_shape = [dims[t] for t in targets]
    # place the sub-diagonal on its axes and broadcast over the rest
    arr = np.asarray(diag, dtype=float).reshape(sub_shape)
    ranks = [sorted(targets).index(t) for t in targets]
    arr = np.moveaxis(arr, list(range(len(targets))), ranks)
    for t in targets:
        shape[t] = dims[t]
    arr = arr.reshape(shape)
    return np.broadcast_to(arr, dims).reshape(-1).copy()


# ----------------------------------------------------------------------------
# Quasi-static noise model
# ----------------------------------------------------------------------------


@dataclass
class DephasingSpec:
    """Quasi-static Gaussian dephasing on one qudit.

    ``sigmas[nu-1]`` is the std of b_nu; by default sigma_nu = sigma / nu.
    Only nu <= d/2 is sampled; b_{d-nu} is the conjugate partner.
    """

    d: int
    sigma: float = 0.0
    sigmas: tuple[float, ...] | None = None

    def sigma_for(self, nu: int) -> float:
        if self.sigmas is not None:
            return float(self.sigmas[nu - 1])
        return self.sigma / nu

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        d = self.d
        b = np.zeros(d - 1, dtype=complex)
        for nu in range(1, d // 2 + 1):
            partner = d - nu
            s = self.sigma_for(nu)
            if partner == nu:
                b[nu - 1] = s * rng.standard_normal()
            else:
                z = s * (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
                b[nu - 1] = z
                b[partner - 1] = np.conj(z)
        return b

    @property
    def active(self) -> bool:
        if self.sigmas is not None:
            return any(s != 0 for s in self.sigmas)
        return self.sigma != 0


@dataclass
class NoiseModel:
    """Noise acting on a register of qudits.

    ``dephasing`` maps qudit index to a :class:`DephasingSpec` (resampled each
    shot); ``cross_kerr`` maps an ordered qudit pair to its fixed
    :class:`CrossKerrMatrix`; ``hw_qudit``/``hw_scale``/``bath_dim`` add a
    random all-HW system-bath term on one qudit, resampled each shot.
    """

    dims: tuple[int, ...]
    dephasing: dict[int, DephasingSpec] = field(default_factory=dict)
    cross_kerr: dict[tuple[int, int], CrossKerrMatrix] = field(default_factory=dict)
    hw_qudit: int | None = None
    hw_scale: float = 0.0
    bath_dim: int = 1

    @property
    def is_diagonal(self) -> bool:
        return self.hw_qudit is None or self.hw_scale == 0.0

    @property
    def is_random(self) -> bool:
        return any(s.active for s in self.dephasing.values()) or not self.is_diagonal

    def static_diagonal(self) -> np.ndarray:
        """Diagonal of the shot-independent part (cross-Kerr couplings)."""
        total = np.zeros(int(np.prod(self.dims)))
        for (a, b), ck in self.cross_kerr.items():
            if ck.d != self.dims[a] or ck.d != self.dims[b]:
                raise ValueError(f"cross-Kerr matrix d={ck.d} does not match register slots {(a, b)}")
            total += embed_diagonal(cross_kerr_diagonal(ck), (a, b), self.dims)
        return total

    def sample_diagonal(self, rng: np.random.Generator, static: np.ndarray | None = None) -> np.ndarray:
        """Register diagonal for one quasi-static shot (system only)."""
        total = self.static_diagonal() if static is None else static.copy()
        for q in sorted(self.dephasing):
            spec = self.dephasing[q]
            if spec.active:
                total += embed_diagonal(dephasing_diagonal(spec.d, spec.sample(rng)), (q,), self.dims)
        return total

    def sample_hamiltonian(self, rng: np.random.Generator, static: np.ndarray | None = None) -> Operator:
        """Full register (x) bath Hamiltonian for one shot."""
        diag = self.sample_diagonal(rng, static)
        b = self.bath_dim if not self.is_diagonal else 1
        h = np.kron(np.diag(diag), np.eye(b)).astype(complex)
        if not self.is_diagonal:
            q = self.hw_qudit
            term = random_hw_hamiltonian(self.dims[q], b, self.hw_scale, rng).data
            full_dims = self.dims + ((b,) if b > 1 else ())
            targets = (q, len(self.dims)) if b > 1 else (q,)
            h = h + embed(term, targets, full_dims)
        dims = self.dims + ((b,) if b > 1 else ())
        return Operator((h + h.conj().T) / 2, dims)
