# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched evolution kernel (see _pykernel for docs)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def _monomial_form(pulses, mask):
    """Column index and value of the single nonzero per row, or None if any pulse is dense."""
    nz = pulses != 0
    if not np.all(nz[mask.astype(bool)].sum(axis=2) == 1):
        return None
    cols = np.argmax(nz, axis=2).astype(np.intp)
    vals = np.take_along_axis(pulses, cols[:, :, None], axis=2)[:, :, 0]
    return np.ascontiguousarray(cols), np.ascontiguousarray(vals)


def evolve_diagonal_batch(energies, intervals, pulses, has_pulse, psi0):
    energies = np.ascontiguousarray(energies, dtype=np.float64)
    intervals = np.ascontiguousarray(intervals, dtype=np.float64)
    pulses_arr = np.ascontiguousarray(pulses, dtype=np.complex128)
    mask_arr = np.ascontiguousarray(has_pulse, dtype=np.uint8)
    # phases depend only on the interval length, and sequences use very few distinct lengths
    uniq, which = np.unique(intervals, return_inverse=True)
    phases_arr = np.exp(-1j * uniq[:, None, None] * energies[None, :, :])

    cdef double complex[:, :, ::1] phases = phases_arr
    cdef Py_ssize_t[::1] slot_phase = np.ascontiguousarray(which, dtype=np.intp)
    cdef double complex[:, :, ::1] p = pulses_arr
    cdef unsigned char[::1] mask = mask_arr
    cdef double complex[:, ::1] init = np.ascontiguousarray(psi0, dtype=np.complex128)

    mono = _monomial_form(pulses_arr, mask_arr)
    cdef bint sparse = mono is not None
    cdef Py_ssize_t[:, ::1] cols
    cdef double complex[:, ::1] vals
    if sparse:
        cols, vals = mono

    cdef Py_ssize_t n_shots = energies.shape[0], dim = energies.shape[1]
    cdef Py_ssize_t n_seg = intervals.shape[0], n_states = init.shape[0]
    out_arr = np.empty((n_shots, n_states, dim), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex[::1] tmp = np.empty(dim, dtype=np.complex128)
    cdef Py_ssize_t s, m, n, i, j, u
    cdef double complex acc

    with nogil:
        for s in range(n_shots):
            for m in range(n_states):
                for i in range(dim):
                    out[s, m, i] = init[m, i]
                for n in range(n_seg):
                    u = slot_phase[n]
                    for i in range(dim):
                        out[s, m, i] = out[s, m, i] * phases[u, s, i]
                    if not mask[n]:
                        continue
                    if sparse:
                        for i in range(dim):
                            tmp[i] = vals[n, i] * out[s, m, cols[n, i]]
                    else:
                        for i in range(dim):
                            acc = 0
                            for j in range(dim):
                                acc = acc + p[n, i, j] * out[s, m, j]
                            tmp[i] = acc
                    for i in range(dim):
                        out[s, m, i] = tmp[i]
    return out_arr
