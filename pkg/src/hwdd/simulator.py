"""Run pulse sequences against Hamiltonians and quasi-static noise ensembles.

Quasi-static means each shot draws one noise realization and keeps it for the
whole sequence. Shot ``k`` always uses the generator ``shot_rng(seed, k)``, so
results do not depend on how shots are split across threads.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .hamiltonians import NoiseModel, embed
from .sequences import INTERVALS, PulseSequence, build, free_sequence
from .tensor_core import InvariantError, Operator, check_unitary

log = logging.getLogger(__name__)

# shots per kernel call; fixed so per-shot arithmetic never depends on the thread count
CHUNK = 128
FIDELITY_SLACK = 1e-9


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(shot),)))


def _mean_stderr(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    const = np.all(values == values[0], axis=0)
    mean = np.where(const, values[0], values.mean(axis=0))
    if n == 1:
        return mean, np.zeros_like(mean)
    stderr = np.where(const, 0.0, values.std(axis=0, ddof=1) / np.sqrt(n))
    return mean, stderr


def ensemble_average(
    run: Callable[[np.random.Generator], np.ndarray | float],
    shots: int,
    seed: int,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of ``run(rng)`` over ``shots`` seeded shots.

    Every shot writes into its own slot before the reduction, so the result
    is independent of ``threads``.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")

    def one(k):
        return np.asarray(run(shot_rng(seed, k)), dtype=float)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(one, range(shots)))
    else:
        values = [one(k) for k in range(shots)]
    return _mean_stderr(np.stack(values))


# ----------------------------------------------------------------------------
# Dense evolution
# ----------------------------------------------------------------------------


def _pulse_matrices(seq: PulseSequence, bath_dim: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    side = int(np.prod(seq.register)) * bath_dim
    n = len(seq.segments)
    intervals = np.array([s.interval for s in seq.segments], dtype=float)
    pulses = np.zeros((n, side, side), dtype=complex)
    mask = np.zeros(n, dtype=np.uint8)
    for i, seg in enumerate(seq.segments):
        if seg.pulses:
            p = seq.slot_unitary(i)
            pulses[i] = np.kron(p, np.eye(bath_dim)) if bath_dim > 1 else p
            mask[i] = 1
    return intervals, pulses, mask


def _bath_dim(side: int, seq: PulseSequence) -> int:
    reg = int(np.prod(seq.register))
    if side % reg:
        raise ValueError(f"Hamiltonian side {side} incompatible with register {seq.register}")
    return side // reg


class _Propagator:
    """exp(-i t H) for many t from one eigendecomposition."""

    def __init__(self, h: np.ndarray):
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise InvariantError("evolution requires a Hermitian Hamiltonian")
        self.diagonal = bool(np.count_nonzero(h - np.diag(np.diag(h))) == 0)
        if self.diagonal:
            self.evals = np.real(np.diag(h))
        else:
            self.evals, self.evecs = np.linalg.eigh(h)
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, t: float) -> np.ndarray:
        if t not in self._cache:
            ph = np.exp(-1j * t * self.evals)
            self._cache[t] = np.diag(ph) if self.diagonal else (self.evecs * ph) @ self.evecs.conj().T
        return self._cache[t]


def evolve_sequence(h: Operator, seq: PulseSequence) -> Operator:
    """Unitary of ``seq`` under ``h`` (register, optionally tensored with a bath last)."""
    bath = _bath_dim(h.side, seq)
    prop = _Propagator(h.data)
    intervals, pulses, mask = _pulse_matrices(seq, bath)
    u = np.eye(h.side, dtype=complex)
    for t, p, has in zip(intervals, pulses, mask):
        u = prop(float(t)) @ u
        if has:
            u = p @ u
    return check_unitary(Operator(u, h.dims), "sequence evolution")


# ----------------------------------------------------------------------------
# Experiment configuration and results
# ----------------------------------------------------------------------------


@dataclass
class SequenceSpec:
    name: str  # "none" or a builder name from sequences.BUILDERS
    reps: int = 1
    label: str | None = None

    def display(self, d: int) -> str:
        if self.label:
            return self.label
        if self.name == "none":
            return "No DD"
        if self.name == "dxd":
            return f"{self.reps}x{d}X{d}"
        return self.name if self.reps == 1 else f"{self.reps}x{self.name}"

    def tag(self) -> str:
        return self.name if self.reps == 1 else f"{self.name}*{self.reps}"


@dataclass
class ExperimentConfig:
    experiment: str
    d: int
    register: tuple[int, ...]
    sequences: list[SequenceSpec]
    times: list[float]
    noise: NoiseModel
    pulse_error: float = 0.0
    time_mode: str = "scale_tau"  # or "repeat"
    tau: float | None = None
    shots: int = 1000
    seed: int = 0
    threads: int = 1
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if len(self.times) == 0:
            raise ValueError("time grid is empty")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("time grid must be strictly increasing")
        if self.time_mode not in ("scale_tau", "repeat"):
            raise ValueError(f"unknown time_mode {self.time_mode!r}")
        if self.time_mode == "repeat" and not self.tau:
            raise ValueError("time_mode 'repeat' needs tau")


@dataclass
class Curve:
    label: str
    sequence: str
    mean: np.ndarray
    stderr: np.ndarray


@dataclass
class ExperimentResult:
    experiment: str
    d: int
    seed: int
    times: np.ndarray
    curves: list[Curve]
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def curve(self, label: str, sequence: str | None = None) -> Curve:
        for c in self.curves:
            if c.label == label and (sequence is None or c.sequence == sequence):
                return c
        raise KeyError((label, sequence))


def realize(spec: SequenceSpec, cfg: ExperimentConfig, total: float) -> PulseSequence:
    """Sequence lasting ``total`` us according to the configured time mode."""
    if spec.name == "none":
        return free_sequence(cfg.register, total)
    per_rep = INTERVALS[spec.name](cfg.d)
    if cfg.time_mode == "scale_tau":
        tau = total / (per_rep * spec.reps)
        reps = spec.reps
    else:
        tau = cfg.tau
        count = total / (per_rep * tau)
        reps = int(round(count))
        if abs(count - reps) > 1e-9 or (reps < 1 and total > 0):
            raise ValueError(f"time {total} us is not a whole number of {spec.name} cycles at tau={tau}")
        if reps == 0:
            return PulseSequence(cfg.register, (), tau, spec.name)
    seq = build(spec.name, cfg.d, tau, reps, cfg.pulse_error)
    if seq.register != cfg.register:
        raise ValueError(f"sequence {spec.name!r} acts on register {seq.register}, experiment uses {cfg.register}")
    return seq


class _Ensemble:
    """Per-shot Hamiltonians for one noise model, sampled once and reused."""

    def __init__(self, noise: NoiseModel, shots: int, seed: int):
        self.noise = noise
        if not noise.is_random:
            shots = 1
        self.shots = shots
        static = noise.static_diagonal()
        if noise.is_diagonal:
            self.bath_dim = 1
            self.energies = np.stack([noise.sample_diagonal(shot_rng(seed, k), static) for k in range(shots)])
        else:
            self.bath_dim = noise.bath_dim
            self.props = [_Propagator(noise.sample_hamiltonian(shot_rng(seed, k), static).data) for k in range(shots)]

    def final_states(self, seq: PulseSequence, psi0: np.ndarray, threads: int = 1) -> np.ndarray:
        """(shots, M, D) states after ``seq`` for initial states ``psi0`` (M, D)."""
        intervals, pulses, mask = _pulse_matrices(seq, self.bath_dim)
        chunks = [range(a, min(a + CHUNK, self.shots)) for a in range(0, self.shots, CHUNK)]

        if self.bath_dim == 1 and self.noise.is_diagonal:
            def work(idx):
                return kernels.evolve_diagonal_batch(self.energies[idx.start:idx.stop], intervals, pulses, mask, psi0)
        else:
            def work(idx):
                out = []
                for k in idx:
                    prop = self.props[k]
                    u = np.eye(psi0.shape[1], dtype=complex)
                    for t, p, has in zip(intervals, pulses, mask):
                        u = prop(float(t)) @ u
                        if has:
                            u = p @ u
                    out.append(psi0 @ u.T)
                return np.stack(out)

        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(work, chunks))
        else:
            parts = [work(c) for c in chunks]
        return np.concatenate(parts, axis=0)


def _with_bath(states: np.ndarray, projector: np.ndarray, bath_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor each initial state with every bath basis state (maximally mixed bath)."""
    if bath_dim == 1:
        return states, projector
    eye = np.eye(bath_dim)
    expanded = np.stack([np.kron(s, eye[b]) for s in states for b in range(bath_dim)])
    return expanded, np.kron(projector, eye)


def _check_fidelity(values: np.ndarray) -> np.ndarray:
    if np.any(values < -FIDELITY_SLACK) or np.any(values > 1 + FIDELITY_SLACK):
        raise InvariantError(f"fidelity outside [0, 1]: min {values.min():.3e}, max {values.max():.3e}")
    return values


def _run_curves(
    cfg: ExperimentConfig,
    preps: Sequence[tuple[str, np.ndarray]],
    projector: np.ndarray,
    final_rho: bool = False,
) -> tuple[list[Curve], dict]:
    ens = _Ensemble(cfg.noise, cfg.shots, cfg.seed)
    labels = [p[0] for p in preps]
    states = np.stack([p[1] for p in preps])
    states_b, proj_b = _with_bath(states, projector, ens.bath_dim)
    n_preps, b = len(preps), ens.bath_dim
    curves = []
    extras: dict = {}
    for spec in cfg.sequences:
        means = np.zeros((len(cfg.times), n_preps))
        errs = np.zeros_like(means)
        for ti, total in enumerate(cfg.times):
            seq = realize(spec, cfg, total)
            psi = ens.final_states(seq, states_b, cfg.threads)
            fid = kernels.projector_expectation(psi, proj_b)  # (shots, n_preps * b)
            fid = _check_fidelity(fid.reshape(fid.shape[0], n_preps, b).mean(axis=2))
            means[ti], errs[ti] = _mean_stderr(fid)
            if final_rho and ti == len(cfg.times) - 1:
                extras.setdefault("final_rho", {})[spec.display(cfg.d)] = _average_rho(psi, b)
        for pi, lab in enumerate(labels):
            name = spec.display(cfg.d)
            label = name if n_preps == 1 else lab
            curves.append(Curve(label, spec.tag(), means[:, pi], errs[:, pi]))
        log.debug("finished sequence %s", spec.tag())
    return curves, extras


def _average_rho(psi: np.ndarray, bath_dim: int) -> np.ndarray:
    """Shot-averaged register density matrix of the first preparation."""
    v = psi[:, :bath_dim, :]
    d_full = v.shape[-1]
    reg = d_full // bath_dim
    v = v.reshape(v.shape[0], bath_dim, reg, bath_dim)
    rho = np.einsum("sbia,sbja->ij", v, v.conj()) / (v.shape[0] * bath_dim)
    return rho


def plus_state(d: int) -> np.ndarray:
    return np.ones(d, dtype=complex) / np.sqrt(d)


def basis_state(d: int, k: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[k] = 1
    return v


def bell_state(d: int = 3) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    for k in range(d):
        v[k * d + k] = 1
    return v / np.sqrt(d)


def bell_projector(d: int = 3) -> np.ndarray:
    """|Phi><Phi| assembled from integer amplitudes, so its entries are exactly 1/d."""
    w = np.zeros(d * d)
    w[:: d + 1] = 1
    return np.outer(w, w).astype(complex) / d


def density_fidelity(rho: np.ndarray, projector: np.ndarray) -> float:
    """Tr(rho P) for a rank-one projector P."""
    return float(np.real(np.sum(rho * projector.T)))


def _result(cfg: ExperimentConfig, curves, extras=None) -> ExperimentResult:
    return ExperimentResult(cfg.experiment, cfg.d, cfg.seed, np.asarray(cfg.times, dtype=float), curves, cfg.echo, extras or {})


def run_state_preservation(cfg: ExperimentConfig) -> ExperimentResult:
    """Fidelity of |+>_d on a single qudit, one curve per sequence."""
    if len(cfg.register) != 1:
        raise ValueError("state preservation runs on a single-qudit register")
    for spec in cfg.sequences:
        if spec.name not in ("none", "dxd", "universal"):
            raise ValueError(f"sequence {spec.name!r} is not a single-qudit sequence")
    psi = plus_state(cfg.d)
    curves, _ = _run_curves(cfg, [("+", psi)], np.outer(psi, psi.conj()))
    return _result(cfg, curves)


def spectator_preparations(d: int, n_qudits: int) -> list[tuple[str, np.ndarray]]:
    """|i> (x) |+> for two qudits, |i> (x) |+> (x) |j> for three; the main qudit is index 1."""
    plus = plus_state(d)
    if n_qudits == 2:
        return [(f"|{i}>", np.kron(basis_state(d, i), plus)) for i in range(d)]
    if n_qudits == 3:
        return [
            (f"|{i},{j}>", np.kron(np.kron(basis_state(d, i), plus), basis_state(d, j)))
            for i in range(d)
            for j in range(d)
        ]
    raise ValueError("cross-Kerr experiment needs a 2- or 3-qudit register")


def run_cross_kerr(cfg: ExperimentConfig) -> ExperimentResult:
    """Main-qudit |+>_d fidelity for every spectator basis preparation."""
    n = len(cfg.register)
    needed = [(0, 1)] if n == 2 else [(0, 1), (1, 2)]
    for pair in needed:
        if pair not in cfg.noise.cross_kerr:
            raise ValueError(f"missing cross-Kerr coupling data for qudit pair {pair}")
    preps = spectator_preparations(cfg.d, n)
    plus = plus_state(cfg.d)
    projector = embed(np.outer(plus, plus.conj()), (1,), cfg.register)
    curves, _ = _run_curves(cfg, preps, projector)
    return _result(cfg, curves)


def run_bell(cfg: ExperimentConfig) -> ExperimentResult:
    """Qutrit Bell-state fidelity with and without CKDD; also the final-time density matrices."""
    if cfg.register != (3, 3):
        raise ValueError("Bell experiment runs on a two-qutrit register")
    curves, extras = _run_curves(cfg, [("bell", bell_state(3))], bell_projector(3), final_rho=True)
    return _result(cfg, curves, extras)


RUNNERS = {
    "preserve": run_state_preservation,
    "crosskerr": run_cross_kerr,
    "bell": run_bell,
}
