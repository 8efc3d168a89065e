import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hwdd.hamiltonians import (
    CrossKerrMatrix,
    DephasingSpec,
    NoiseModel,
    compose_register,
    cross_kerr_hamiltonian,
    data_path,
    dephasing_hamiltonian,
    device_cross_kerr,
    embed,
    embed_diagonal,
    load_device_rates,
    random_hw_coefficients,
    random_hw_hamiltonian,
)
from hwdd.heisenberg_weyl import HwLabel, hw_expand, phase_op
from hwdd.tensor_core import Operator

TWO_PI = 2 * np.pi
Q12 = {"1,1": 0.112, "1,2": 0.623, "2,1": -0.515, "2,2": 0.341}


def ck_q12():
    return CrossKerrMatrix.from_mhz(3, Q12)


class TestDeviceRates:
    def test_bundled_table(self):
        table = load_device_rates()
        assert table["qutrit"]["Q1-Q2"] == Q12
        assert table["qutrit"]["Q2-Q3"] == {"1,1": 0.212, "1,2": 0.465, "2,1": -0.162, "2,2": 0.615}
        assert len(table["ququart"]["Q1-Q2"]) == 9

    def test_mhz_to_rad_per_us(self):
        ck = device_cross_kerr("Q1-Q2", 3)
        assert ck.alpha[0, 0] == pytest.approx(TWO_PI * 0.112)
        assert ck.alpha[1, 0] == pytest.approx(-TWO_PI * 0.515)

    def test_unknown_pair(self):
        with pytest.raises(KeyError, match="Q7-Q8"):
            device_cross_kerr("Q7-Q8", 3)

    def test_env_override(self, tmp_path, monkeypatch):
        custom = {"qutrit": {"A-B": {"1,1": 1.0, "1,2": 0, "2,1": 0, "2,2": 0}}}
        path = tmp_path / "rates.json"
        path.write_text(json.dumps(custom))
        monkeypatch.setenv("HWDD_DATA", str(path))
        assert data_path() == path
        assert device_cross_kerr("A-B", 3).alpha[0, 0] == pytest.approx(TWO_PI)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            CrossKerrMatrix(3, np.zeros((3, 3)))


class TestDephasing:
    def test_qubit(self):
        assert np.allclose(dephasing_hamiltonian(2, [0.5]).data, 0.5 * np.diag([1, -1]))

    def test_qutrit_real_traceless(self):
        r, phi = 0.7, 0.4
        h = dephasing_hamiltonian(3, [r * np.exp(1j * phi), r * np.exp(-1j * phi)])
        z = phase_op(3).data
        direct = r * np.exp(1j * phi) * z + r * np.exp(-1j * phi) * z @ z
        assert np.allclose(h.data, direct, atol=1e-14)
        assert abs(np.trace(h.data)) < 1e-14
        assert h.is_hermitian()

    def test_zero(self):
        assert np.array_equal(dephasing_hamiltonian(4, [0, 0, 0]).data, np.zeros((4, 4)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="conj"):
            dephasing_hamiltonian(3, [1.0, 2.0])

    @given(st.integers(0, 2**32 - 1), st.integers(2, 7))
    def test_sampled_is_hermitian_and_commutes_with_z(self, seed, d):
        b = DephasingSpec(d, sigma=1.0).sample(np.random.default_rng(seed))
        h = dephasing_hamiltonian(d, b).data
        z = phase_op(d).data
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12
        assert np.array_equal(h @ z, z @ h)

    def test_default_sigmas(self):
        spec = DephasingSpec(5, sigma=1.0)
        assert spec.sigma_for(1) == 1.0 and spec.sigma_for(2) == 0.5
        assert not DephasingSpec(3).active

    def test_sample_statistics(self):
        rng = np.random.default_rng(0)
        b = np.array([DephasingSpec(3, sigma=2.0).sample(rng) for _ in range(20000)])
        # |b_1|^2 has mean sigma^2
        assert np.mean(np.abs(b[:, 0]) ** 2) == pytest.approx(4.0, rel=0.05)


class TestCrossKerr:
    def test_table_diagonal(self):
        h = cross_kerr_hamiltonian(ck_q12())
        a = TWO_PI * np.array([0.112, 0.623, -0.515, 0.341])
        expected = np.array([0, 0, 0, 0, a[0], a[1], 0, a[2], a[3]])
        assert np.allclose(np.diag(h.data), expected)
        assert h.dims == (3, 3)

    def test_zero(self):
        assert np.array_equal(cross_kerr_hamiltonian(CrossKerrMatrix.zero(4)).data, np.zeros((16, 16)))

    def test_zeta00(self):
        ck = ck_q12()
        assert ck.zeta00() == pytest.approx(TWO_PI * 0.561 / 9, abs=1e-12)
        exp = hw_expand(cross_kerr_hamiltonian(ck), d=3, n_qudits=2)
        assert abs(exp[(HwLabel(0, 0, 3), HwLabel(0, 0, 3))] - ck.zeta00()) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_zeta_matches_expansion(self, d):
        rng = np.random.default_rng(d)
        ck = CrossKerrMatrix(d, rng.normal(size=(d - 1, d - 1)))
        exp = hw_expand(cross_kerr_hamiltonian(ck), d=d, n_qudits=2)
        zeta = ck.zeta()
        # independent oracle: (1/d^2) sum_ij gamma^{-(ik + jl)} alpha_ij
        g = np.exp(2j * np.pi / d)
        for k in range(d):
            for l in range(d):
                oracle = sum(g ** (-(i * k + j * l)) * ck.alpha[i - 1, j - 1] for i in range(1, d) for j in range(1, d)) / d**2
                assert abs(zeta[k, l] - oracle) < 1e-12
                assert abs(exp[(HwLabel(0, k, d), HwLabel(0, l, d))] - oracle) < 1e-12
        off = {k: v for k, v in exp.nonzero().items() if k[0].alpha or k[1].alpha}
        assert off == {}

    def test_commutes_with_local_z(self):
        h = cross_kerr_hamiltonian(ck_q12()).data
        z = phase_op(3).data
        for zz in (np.kron(z, np.eye(3)), np.kron(np.eye(3), z)):
            assert np.array_equal(h @ zz, zz @ h)


class TestRandomHW:
    def test_deterministic(self):
        a = random_hw_hamiltonian(3, 2, 1.0, 42).data
        b = random_hw_hamiltonian(3, 2, 1.0, 42).data
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    @pytest.mark.parametrize("bath", [1, 2, 3])
    def test_hermitian(self, d, bath):
        coeffs = random_hw_coefficients(d, bath, 1.0, 11)
        raw = sum(np.kron(hw_expand(np.eye(d)).basis_element(l), c) for l, c in coeffs.items())
        assert np.max(np.abs(raw - raw.conj().T)) < 1e-12
        assert random_hw_hamiltonian(d, bath, 1.0, 11).is_hermitian()

    def test_expansion_round_trip(self):
        coeffs = random_hw_coefficients(3, 1, 1.0, 5)
        h = random_hw_hamiltonian(3, 1, 1.0, 5)
        exp = hw_expand(h)
        for l, c in coeffs.items():
            assert abs(exp[l] - c[0, 0]) < 1e-12

    def test_every_label_present(self):
        exp = hw_expand(random_hw_hamiltonian(4, 1, 1.0, 3))
        assert len(exp.nonzero()) == 16


class TestComposition:
    def test_single_part(self):
        h = cross_kerr_hamiltonian(ck_q12())
        assert np.array_equal(compose_register((3, 3), [((0, 1), h)]).data, h.data)

    def test_two_dephasing_terms(self):
        h1 = dephasing_hamiltonian(3, [0.3 + 0.1j, 0.3 - 0.1j])
        h2 = dephasing_hamiltonian(3, [0.5j, -0.5j])
        total = compose_register((3, 3), [((0,), h1), ((1,), h2)]).data
        oracle = np.kron(h1.data, np.eye(3)) + np.kron(np.eye(3), h2.data)
        assert np.allclose(total, oracle, atol=1e-14)

    def test_chain_index_sum(self):
        a = ck_q12()
        b = device_cross_kerr("Q2-Q3", 3)
        h = compose_register((3, 3, 3), [((0, 1), cross_kerr_hamiltonian(a)), ((1, 2), cross_kerr_hamiltonian(b))])
        diag = np.diag(h.data).real
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    e = (a.alpha[i - 1, j - 1] if i and j else 0) + (b.alpha[j - 1, k - 1] if j and k else 0)
                    assert diag[9 * i + 3 * j + k] == pytest.approx(e)
        assert np.count_nonzero(h.data - np.diag(np.diag(h.data))) == 0

    def test_embed_reversed_targets(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3))
        full = embed(np.kron(a, b), (2, 0), (3, 4, 2))
        oracle = np.kron(np.kron(b, np.eye(4)), a)
        assert np.allclose(full, oracle)

    @given(st.permutations([0, 1, 2]), st.integers(1, 3))
    def test_embed_diagonal_matches_dense(self, perm, k):
        dims = (2, 3, 2)
        targets = tuple(perm[:k])
        rng = np.random.default_rng(sum(perm) + k)
        diag = rng.normal(size=int(np.prod([dims[t] for t in targets])))
        dense = embed(np.diag(diag), targets, dims)
        assert np.allclose(embed_diagonal(diag, targets, dims), np.diag(dense).real)

    def test_mismatched_part(self):
        with pytest.raises(ValueError):
            compose_register((3, 3), [((0,), Operator(np.eye(2)))])


class TestNoiseModel:
    def test_sample_hamiltonian_hermitian_and_seeded(self):
        model = NoiseModel((3, 3), {0: DephasingSpec(3, 0.5)}, {(0, 1): ck_q12()}, hw_qudit=1, hw_scale=0.3, bath_dim=2)
        h1 = model.sample_hamiltonian(np.random.default_rng(9))
        h2 = model.sample_hamiltonian(np.random.default_rng(9))
        assert h1.side == 18 and h1.is_hermitian()
        assert np.array_equal(h1.data, h2.data)
        assert not model.is_diagonal and model.is_random

    def test_static_part(self):
        model = NoiseModel((3, 3), {}, {(0, 1): ck_q12()})
        assert not model.is_random
        assert np.allclose(model.static_diagonal(), np.diag(cross_kerr_hamiltonian(ck_q12()).data).real)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            NoiseModel((4, 4), {}, {(0, 1): ck_q12()}).static_diagonal()
