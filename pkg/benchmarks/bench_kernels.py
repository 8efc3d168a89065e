"""Compare the compiled and numpy kernel backends on realistic batch shapes.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from hwdd.kernels import _pykernel

try:
    from hwdd.kernels import _ckernel
except ImportError:
    _ckernel = None

from hwdd.sequences import ckdd_sequence, spectator_ckdd_sequence
from hwdd.simulator import _pulse_matrices

CASES = {
    # name: (sequence, shots, initial states)
    "bell ckdd x6 (D=9)": (ckdd_sequence(3, 0.18).repeated(6), 1000, 1),
    "spectator ckdd (D=27)": (spectator_ckdd_sequence(3, 0.03), 200, 9),
}


def make_args(seq, shots, n_states, seed=0):
    intervals, pulses, has_pulse = _pulse_matrices(seq)
    rng = np.random.default_rng(seed)
    side = pulses.shape[1]
    energies = rng.normal(size=(shots, side))
    psi0 = rng.normal(size=(n_states, side)) + 1j * rng.normal(size=(n_states, side))
    psi0 /= np.linalg.norm(psi0, axis=1, keepdims=True)
    return energies, intervals, pulses, has_pulse, psi0


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    print(f"{'evolve_diagonal_batch':<26}{'python [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for name, (seq, shots, n_states) in CASES.items():
        args = make_args(seq, shots, n_states)
        t_py = bench(_pykernel.evolve_diagonal_batch, args, opts.repeat)
        if _ckernel is None:
            print(f"{name:<26}{1e3 * t_py:>12.2f}{'n/a':>13}")
            continue
        t_c = bench(_ckernel.evolve_diagonal_batch, args, opts.repeat)
        diff = np.max(np.abs(_ckernel.evolve_diagonal_batch(*args) - _pykernel.evolve_diagonal_batch(*args)))
        print(f"{name:<26}{1e3 * t_py:>12.2f}{1e3 * t_c:>13.2f}{t_py / t_c:>9.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
