import numpy as np
import pytest

from eqml import statevec as sv
from eqml.errors import QubitOutOfRange, SameQubit, TooLarge


def rand_state(n, rng):
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    amps /= np.linalg.norm(amps)
    return sv.StateVector(n, amps)


def dense_1q(n, qubit, m):
    ops = [np.eye(2, dtype=complex)] * n
    ops[qubit] = m
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out


class TestApplyRotation:
    def test_rx_pi_on_zero(self):
        s = sv.basis_state(1, 0)
        sv.apply_rotation(s, 0, "X", np.pi)
        assert np.allclose(s.amplitudes, [0, -1j], atol=1e-12)

    def test_rz_phase_on_zero(self):
        theta = 0.7321
        s = sv.basis_state(1, 0)
        sv.apply_rotation(s, 0, "Z", theta)
        assert np.allclose(s.amplitudes, [np.exp(-1j * theta / 2), 0], atol=1e-12)

    def test_norm_preserved(self, rng):
        s = rand_state(4, rng)
        for q, axis in [(0, "X"), (1, "Y"), (3, "Z")]:
            sv.apply_rotation(s, q, axis, rng.uniform(-np.pi, np.pi))
            assert abs(s.norm() - 1.0) < 1e-12

    def test_matches_dense_oracle(self, rng):
        s = rand_state(3, rng)
        angle = 1.234
        expect = dense_1q(3, 1, sv.rotation_matrix("Y", angle)) @ s.amplitudes
        sv.apply_rotation(s, 1, "Y", angle)
        assert np.allclose(s.amplitudes, expect, atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(QubitOutOfRange):
            sv.apply_rotation(sv.basis_state(2, 0), 2, "X", 0.1)


class TestApplyCZ:
    def test_11_flips_sign(self):
        s = sv.basis_state(2, 3)
        sv.apply_cz(s, 0, 1)
        assert np.array_equal(s.amplitudes, [0, 0, 0, -1])

    def test_10_unchanged(self):
        s = sv.basis_state(2, 2)
        sv.apply_cz(s, 0, 1)
        assert np.array_equal(s.amplitudes, [0, 0, 1, 0])

    def test_involution(self, rng):
        s = rand_state(3, rng)
        before = s.amplitudes.copy()
        sv.apply_cz(s, 0, 2)
        sv.apply_cz(s, 0, 2)
        assert np.array_equal(s.amplitudes, before)

    def test_same_qubit_rejected(self):
        with pytest.raises(SameQubit):
            sv.apply_cz(sv.basis_state(2, 0), 1, 1)


class TestOrbitalDft:
    def test_uniform_block_concentrates_on_sector_zero(self):
        n_rad, n_orb = 1, 2
        s = sv.StateVector(3, np.concatenate([np.full(4, 0.5), np.zeros(4)]).astype(complex))
        sv.apply_orbital_dft_inverse(s, n_rad, n_orb)
        assert np.allclose(s.amplitudes[:4], [1, 0, 0, 0], atol=1e-12)

    def test_delta_spreads_uniformly(self):
        s = sv.basis_state(3, 0)  # orbital part = position 0 on ring 0
        sv.apply_orbital_dft_inverse(s, 1, 2)
        assert np.allclose(s.amplitudes[:4], 0.5, atol=1e-12)

    def test_adjoint_round_trip(self, rng):
        s = rand_state(5, rng)
        before = s.amplitudes.copy()
        sv.apply_orbital_dft_inverse(s, 2, 3)
        sv.apply_orbital_dft(s, 2, 3)
        assert np.allclose(s.amplitudes, before, atol=1e-12)

    def test_matches_dense_dft_oracle(self, rng):
        n_rad, n_orb = 2, 2
        s = rand_state(4, rng)
        blocks = s.amplitudes.reshape(4, 4).copy()
        n_phi = 4
        w = np.exp(-2j * np.pi / n_phi)
        kernel = w ** np.outer(np.arange(n_phi), np.arange(n_phi)) / np.sqrt(n_phi)
        expect = (blocks @ kernel.T).reshape(-1)
        sv.apply_orbital_dft_inverse(s, n_rad, n_orb)
        assert np.allclose(s.amplitudes, expect, atol=1e-12)


class TestExpectation:
    def test_zero_state_z_plus_one(self):
        s = sv.basis_state(4, 0)
        for q in range(2):
            assert sv.expectation(s, sv.Observable(q, 2, 2)) == 1.0

    def test_projected_observable_annihilates_orbital_zero(self):
        s = sv.basis_state(4, 0)  # orbital register in sector 0
        assert sv.expectation(s, sv.Observable(0, 2, 2, suppress_m0=True)) == 0.0

    def test_matches_dense_matrix_oracle(self, rng):
        s = rand_state(4, rng)
        for suppress in (False, True):
            obs = sv.Observable(1, 2, 2, suppress)
            m = np.diag(obs.diag()).astype(complex)
            expect = np.real(np.vdot(s.amplitudes, m @ s.amplitudes))
            assert abs(sv.expectation(s, obs) - expect) < 1e-10

    def test_bounds(self, rng):
        for _ in range(5):
            s = rand_state(4, rng)
            for suppress in (False, True):
                e = sv.expectation(s, sv.Observable(0, 2, 2, suppress))
                assert -1.0 <= e <= 1.0

    def test_observable_must_be_radial(self):
        with pytest.raises(QubitOutOfRange):
            sv.Observable(2, 2, 2)


class TestDensityMatrix:
    def test_zero_state(self):
        rho = sv.density_matrix(sv.basis_state(1, 0))
        assert np.array_equal(rho, [[1, 0], [0, 0]])

    def test_trace_one(self, rng):
        rho = sv.density_matrix(rand_state(4, rng))
        assert abs(np.trace(rho) - 1.0) < 1e-12

    def test_pure_state_idempotent(self, rng):
        rho = sv.density_matrix(rand_state(4, rng))
        assert np.max(np.abs(rho @ rho - rho)) < 1e-10

    def test_guard(self, rng):
        with pytest.raises(TooLarge):
            sv.density_matrix(sv.basis_state(13, 0), max_qubits=12)


def test_disjoint_gates_commute(rng):
    s1 = rand_state(4, rng)
    s2 = s1.copy()
    sv.apply_rotation(s1, 0, "X", 0.3)
    sv.apply_rotation(s1, 2, "Y", 1.1)
    sv.apply_rotation(s2, 2, "Y", 1.1)
    sv.apply_rotation(s2, 0, "X", 0.3)
    assert np.allclose(s1.amplitudes, s2.amplitudes, atol=1e-12)
