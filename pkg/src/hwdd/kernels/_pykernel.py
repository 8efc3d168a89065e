"""Pure numpy implementations of the batched evolution kernels."""
import numpy as np


def evolve_diagonal_batch(energies, intervals, pulses, has_pulse, psi0):
    """Evolve states through a pulse timeline under per-shot diagonal Hamiltonians.

    Parameters
    ----------
    energies : (S, D) float64
        Diagonal of the Hamiltonian for each of S shots.
    intervals : (N,) float64
        Free-evolution time before each pulse slot.
    pulses : (N, D, D) complex128
        Full-register pulse unitary applied after each interval.
    has_pulse : (N,) uint8
        Zero where the slot carries no pulse (``pulses[n]`` is then ignored).
    psi0 : (M, D) complex128
        Initial states.

    Returns
    -------
    (S, M, D) complex128 final states.
    """
    energies = np.ascontiguousarray(energies, dtype=np.float64)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    s, m = energies.shape[0], psi0.shape[0]
    psi = np.empty((s, m, psi0.shape[1]), dtype=np.complex128)
    psi[:] = psi0
    phase_cache = {}
    for n, t in enumerate(intervals):
        t = float(t)
        if t not in phase_cache:
            phase_cache[t] = np.exp(-1j * t * energies)[:, None, :]
        psi *= phase_cache[t]
        if has_pulse[n]:
            psi = psi @ pulses[n].T
    return psi


def projector_expectation(psi, proj):
    """Re <psi|P|psi> for every state in an (S, M, D) batch."""
    psi = np.asarray(psi, dtype=np.complex128)
    return np.real(np.sum(psi.conj() * (psi @ np.asarray(proj).T), axis=-1))
