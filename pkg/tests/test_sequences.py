import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hwdd.hamiltonians import random_hw_hamiltonian
from hwdd.heisenberg_weyl import HwLabel, hw_group, phase_op, shift_op, shift_subgroup
from hwdd.sequences import (
    BUILDERS,
    apply_pulse_error,
    build,
    ckdd_sequence,
    compile_shift,
    cycle_sequence,
    dxd_sequence,
    free_sequence,
    is_cyclic,
    native_factors,
    simultaneous_sequence,
    spectator_ckdd_sequence,
    subspace_x,
    universal_sequence,
)
from hwdd.simulator import evolve_sequence
from hwdd.tensor_core import InvariantError, Operator, identity, unitary_infidelity

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def pauli_name(m):
    for name, p in PAULI.items():
        overlap = np.trace(p.conj().T @ m) / 2
        if abs(abs(overlap) - 1) < 1e-12:
            return name
    return None


def timeline(seq):
    """Pulse names after each interval, in time order (single qubit)."""
    return [pauli_name(s.pulses[0].data) if s.pulses else "-" for s in seq.segments]


def naive_unitary(h, seq):
    """Dense oracle: exp via eigh, pulses via explicit Kronecker products."""
    evals, vecs = np.linalg.eigh(h)
    u = np.eye(h.shape[0], dtype=complex)
    bath = h.shape[0] // int(np.prod(seq.register))
    for seg in seq.segments:
        u = (vecs * np.exp(-1j * seg.interval * evals)) @ vecs.conj().T @ u
        ops = [seg.pulses[q].data if q in seg.pulses else np.eye(dq) for q, dq in enumerate(seq.register)]
        p = ops[0]
        for o in ops[1:]:
            p = np.kron(p, o)
        u = np.kron(p, np.eye(bath)) @ u
    return u


class TestCycleSequence:
    def test_xy4_up_to_relabeling(self):
        group = [Operator(PAULI[n]) for n in "IXYZ"]
        seq = cycle_sequence(group, 1.0)
        names = timeline(seq)
        assert names[0] == names[2] and names[1] == names[3] and names[0] != names[1]
        assert "I" not in names

    def test_xy4_exact_order(self):
        # cycling I, X, Z, Y produces pulses X, Y, X, Y; as an operator product Y f X f Y f X f
        group = [Operator(PAULI[n]) for n in "IXZY"]
        assert timeline(cycle_sequence(group, 1.0)) == ["X", "Y", "X", "Y"]

    def test_trivial_group(self):
        seq = cycle_sequence([identity(3)], 0.5)
        assert len(seq.segments) == 1 and seq.pulse_count == 0 and seq.total_duration == 0.5

    def test_qutrit_hwg(self):
        seq = cycle_sequence(hw_group(3), 0.1)
        assert len(seq.segments) == 9
        assert is_cyclic(seq)

    def test_rejects_non_unitary(self):
        with pytest.raises(InvariantError):
            cycle_sequence([identity(2), Operator(np.diag([1.0, 2.0]))], 1.0)

    def test_requires_identity_first(self):
        with pytest.raises(ValueError, match="identity"):
            cycle_sequence([shift_op(2), identity(2)], 1.0)

    def test_realizes_group_product(self):
        # U(T) = prod_j g_j^dag f g_j for a random Hamiltonian
        h = random_hw_hamiltonian(3, 2, 1.0, 4)
        group = hw_group(3)
        tau = 0.07
        evals, vecs = np.linalg.eigh(h.data)
        f = (vecs * np.exp(-1j * tau * evals)) @ vecs.conj().T
        oracle = np.eye(6, dtype=complex)
        for g in group:
            gg = np.kron(g.data, np.eye(2))
            oracle = gg.conj().T @ f @ gg @ oracle
        u = evolve_sequence(h, cycle_sequence(group, tau)).data
        assert np.max(np.abs(u - oracle)) < 1e-10


class TestDxd:
    def test_qubit(self):
        seq = dxd_sequence(2, 1.0)
        assert [s.interval for s in seq.segments] == [1.0, 1.0]
        assert all(np.array_equal(s.pulses[0].data, PAULI["X"]) for s in seq.segments)

    def test_qutrit_three_pulses(self):
        seq = dxd_sequence(3, 0.2)
        assert seq.pulse_count == 3
        assert np.array_equal(seq.net_pulse_product(), np.eye(3))

    def test_fixed_total_time(self):
        total = 9 * 0.12
        intervals = []
        for reps in (1, 2, 3):
            seq = dxd_sequence(3, total / (3 * reps), reps)
            assert seq.total_duration == pytest.approx(total)
            intervals.append(seq.segments[0].interval)
        assert intervals == pytest.approx([3 * 0.12, 1.5 * 0.12, 0.12])

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_equivalent_to_shift_cycle(self, d):
        h = random_hw_hamiltonian(d, 2, 1.0, d)
        a = evolve_sequence(h, dxd_sequence(d, 0.13)).data
        b = evolve_sequence(h, cycle_sequence(shift_subgroup(d), 0.13)).data
        assert np.max(np.abs(a - b)) < 1e-10

    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError):
            dxd_sequence(3, 1.0, 0)


class TestUniversal:
    def test_sizes(self):
        assert len(universal_sequence(2, 1.0).segments) == 4
        assert len(universal_sequence(3, 1.0).segments) == 9

    def test_qubit_is_xy4_type(self):
        names = timeline(universal_sequence(2, 1.0))
        assert names[0] == names[2] and names[1] == names[3] and names[0] != names[1]

    @pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
    def test_composite_pulses_unitary(self, d):
        for s in universal_sequence(d, 1.0).segments:
            for op in s.pulses.values():
                assert np.max(np.abs(op.data.conj().T @ op.data - np.eye(d))) <= 1e-12

    def test_custom_order(self):
        order = [HwLabel(0, 0, 2), HwLabel(1, 0, 2), HwLabel(0, 1, 2), HwLabel(1, 1, 2)]
        assert timeline(universal_sequence(2, 1.0, order)) == ["X", "Y", "X", "Y"]
        with pytest.raises(ValueError):
            universal_sequence(2, 1.0, order[1:])


class TestMultiQudit:
    def test_ckdd_qubit_slots(self):
        seq = ckdd_sequence(2, 1.0)
        assert len(seq.segments) == 4
        assert seq.pulses_on(0) == [1, 2, 3, 4]
        assert seq.pulses_on(1) == [2, 4]

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_ckdd_cyclic(self, d):
        assert is_cyclic(ckdd_sequence(d, 1.0))

    def test_ckdd_qutrit_counts(self):
        seq = ckdd_sequence(3, 0.2)
        assert len(seq.pulses_on(0)) == 9 and len(seq.pulses_on(1)) == 3
        assert seq.total_duration == pytest.approx(9 * 0.2)

    def test_spectator(self):
        seq = spectator_ckdd_sequence(3, 0.1)
        assert len(seq.segments) == 9
        assert seq.pulses_on(0) == seq.pulses_on(2) == list(range(1, 10))
        assert seq.pulses_on(1) == [3, 6, 9]
        assert is_cyclic(seq)
        assert seq.total_duration == pytest.approx(0.9)

    def test_spectator_restriction_matches_ckdd(self):
        spec = spectator_ckdd_sequence(3, 0.1)
        ck = ckdd_sequence(3, 0.1)
        # main qudit 1 plays the role of ckdd's outer qudit, spectator 0 the inner one
        assert spec.pulses_on(1) == ck.pulses_on(1)
        assert spec.pulses_on(0) == ck.pulses_on(0)

    def test_simultaneous(self):
        seq = simultaneous_sequence(2, 1.0)
        assert len(seq.segments) == 2
        for i in range(2):
            assert np.array_equal(seq.slot_unitary(i), np.kron(PAULI["X"], PAULI["X"]))
        assert is_cyclic(seq)

    @pytest.mark.parametrize("name", sorted(BUILDERS))
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_all_builders_cyclic(self, name, d):
        assert is_cyclic(build(name, d, 0.1))

    @pytest.mark.parametrize("name,factor", [("dxd", lambda d: d), ("universal", lambda d: d * d), ("ckdd", lambda d: d * d),
                                             ("spectator", lambda d: d * d), ("simultaneous", lambda d: d)])
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_duration(self, name, factor, d):
        assert build(name, d, 0.3).total_duration == pytest.approx(factor(d) * 0.3)

    def test_dxd_reps_duration(self):
        assert build("dxd", 4, 0.1, reps=3).total_duration == pytest.approx(4 * 0.1 * 3)

    def test_evolution_matches_dense_oracle(self):
        # three qubits plus a two-level bath
        seq = spectator_ckdd_sequence(2, 0.05)
        rng = np.random.default_rng(9)
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        h = Operator((a + a.conj().T) / 2, (2, 2, 2, 2))
        assert np.max(np.abs(evolve_sequence(h, seq).data - naive_unitary(h.data, seq))) < 1e-10

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown sequence"):
            build("xy8", 3, 0.1)

    def test_free(self):
        seq = free_sequence((3, 3), 2.0)
        assert seq.pulse_count == 0 and seq.total_duration == 2.0

    def test_json_shape(self):
        doc = json.loads(json.dumps(ckdd_sequence(2, 0.5).to_json()))
        assert doc["metadata"] == {"total_us": 2.0, "pulse_count": 6, "native_pulse_count": 12}
        assert set(doc["segments"][1]["pulses"]) == {"0", "1"}
        assert doc["segments"][0]["pulses"]["0"] == [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]


class TestCompilation:
    @pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
    def test_compile_shift(self, d):
        dec = compile_shift(d)
        assert np.array_equal(dec.product(), shift_op(d).data)
        assert dec.native_pulse_count == 2 * (d - 1) == 2 * len(dec.factors)

    def test_qutrit_factors(self):
        dec = compile_shift(3)
        assert [lv for lv, _ in dec.factors] == [(0, 1), (1, 2)]
        assert np.array_equal(subspace_x(0, 1, 3).data @ subspace_x(1, 2, 3).data, shift_op(3).data)

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_native_factors_of_powers(self, d):
        for k in range(1, d):
            target = np.linalg.matrix_power(shift_op(d).data, k) @ phase_op(d).data
            factors = native_factors(Operator(target))
            assert len(factors) == (d - 1) * min(k, d - k)
            prod = np.eye(d, dtype=complex)
            for i, j in factors:
                prod = prod @ subspace_x(i, j, d).data
            # equal up to a diagonal frame change
            assert np.max(np.abs(np.abs(prod) - np.abs(target))) < 1e-12

    def test_non_monomial(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert native_factors(Operator(h)) is None


class TestPulseError:
    def test_zero_is_identity(self):
        seq = dxd_sequence(3, 0.1)
        assert apply_pulse_error(seq, 0.0) is seq

    def test_unitary(self):
        seq = apply_pulse_error(universal_sequence(3, 0.1), 0.05)
        for s in seq.segments:
            for op in s.pulses.values():
                assert np.max(np.abs(op.data.conj().T @ op.data - np.eye(3))) <= 1e-12

    def test_bounds(self):
        with pytest.raises(ValueError):
            apply_pulse_error(dxd_sequence(3, 0.1), 0.2)

    def test_infidelity_grows_with_pulse_count(self):
        vals = []
        for reps in (1, 2, 3):
            seq = apply_pulse_error(dxd_sequence(3, 0.1, reps), 0.02)
            vals.append(unitary_infidelity(Operator(seq.net_pulse_product())))
        assert 0 < vals[0] < vals[1] < vals[2]

    @given(st.floats(-0.19, 0.19), st.integers(2, 5))
    def test_error_model_generator(self, eps, d):
        seq = apply_pulse_error(dxd_sequence(d, 1.0), eps)
        p = seq.segments[0].pulses[0].data
        gen = sum(subspace_x(i, i + 1, d).data for i in range(d - 1)) / 2
        evals, vecs = np.linalg.eigh(gen)
        oracle = shift_op(d).data @ (vecs * np.exp(-1j * eps * evals)) @ vecs.conj().T
        assert np.max(np.abs(p - oracle)) < 1e-12
