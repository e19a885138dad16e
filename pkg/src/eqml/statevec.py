"""Dense complex statevector simulator.

Index layout: qubit 0 is the most significant bit of the flat amplitude
index.  Radial qubits occupy positions 0..n_rad-1 and orbital qubits
n_rad..n-1, so a flat index decomposes as r * N_phi + phi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QubitOutOfRange, SameQubit, TooLarge

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray  # complex128, length 2**n_qubits

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError("amplitude length must be 2**n_qubits")

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def basis_state(n_qubits: int, index: int) -> StateVector:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def _check_qubit(state: StateVector, qubit: int):
    if not 0 <= qubit < state.n_qubits:
        raise QubitOutOfRange(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """exp(-i * angle/2 * sigma_axis) as a 2x2 matrix."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return c * np.eye(2, dtype=complex) - 1j * s * _PAULI[axis]


def _apply_1q(amps: np.ndarray, m: np.ndarray, qubit: int, n: int) -> None:
    a = amps.reshape(2**qubit, 2, -1)
    a0 = m[0, 0] * a[:, 0] + m[0, 1] * a[:, 1]
    a1 = m[1, 0] * a[:, 0] + m[1, 1] * a[:, 1]
    a[:, 0], a[:, 1] = a0, a1


def apply_rotation(state: StateVector, qubit: int, axis: str, angle: float) -> StateVector:
    """In-place single-qubit rotation exp(-i*angle/2*sigma_axis)."""
    _check_qubit(state, qubit)
    _apply_1q(state.amplitudes, rotation_matrix(axis, angle), qubit, state.n_qubits)
    return state


def apply_pauli(state: StateVector, qubit: int, axis: str) -> StateVector:
    """In-place Pauli gate; used by adjoint differentiation."""
    _check_qubit(state, qubit)
    _apply_1q(state.amplitudes, _PAULI[axis], qubit, state.n_qubits)
    return state


def apply_cz(state: StateVector, qubit_a: int, qubit_b: int) -> StateVector:
    """In-place controlled-Z: flips the sign where both bits are 1."""
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    if qubit_a == qubit_b:
        raise SameQubit(f"CZ needs two distinct qubits, got {qubit_a} twice")
    n = state.n_qubits
    idx = np.arange(2**n)
    mask = ((idx >> (n - 1 - qubit_a)) & 1) & ((idx >> (n - 1 - qubit_b)) & 1)
    state.amplitudes[mask == 1] *= -1
    return state


def apply_orbital_dft_inverse(state: StateVector, n_rad: int, n_orb: int) -> StateVector:
    """Blockwise unitary DFT over the orbital index, kernel w^(-m*phi)/sqrt(N_phi)."""
    blocks = state.amplitudes.reshape(2**n_rad, 2**n_orb)
    state.amplitudes = np.fft.fft(blocks, axis=1, norm="ortho").reshape(-1)
    return state


def apply_orbital_dft(state: StateVector, n_rad: int, n_orb: int) -> StateVector:
    """Adjoint of apply_orbital_dft_inverse."""
    blocks = state.amplitudes.reshape(2**n_rad, 2**n_orb)
    state.amplitudes = np.fft.ifft(blocks, axis=1, norm="ortho").reshape(-1)
    return state


@dataclass(frozen=True)
class Observable:
    """Z on a radial qubit, optionally with the m=0 orbital sector projected out."""

    qubit: int
    n_rad: int
    n_orb: int
    suppress_m0: bool = False

    def __post_init__(self):
        if not 0 <= self.qubit < self.n_rad:
            raise QubitOutOfRange(
                f"observable qubit {self.qubit} must lie in the radial register (n_rad={self.n_rad})"
            )

    def diag(self) -> np.ndarray:
        """Diagonal of the observable in the computational basis."""
        n = self.n_rad + self.n_orb
        idx = np.arange(2**n)
        d = 1.0 - 2.0 * ((idx >> (n - 1 - self.qubit)) & 1)
        if self.suppress_m0:
            d = d * ((idx & (2**self.n_orb - 1)) != 0)
        return d


def expectation(state: StateVector, obs: Observable) -> float:
    if state.n_qubits != obs.n_rad + obs.n_orb:
        raise QubitOutOfRange("observable register sizes do not match the state")
    probs = np.abs(state.amplitudes) ** 2
    return float(np.dot(obs.diag(), probs))


def density_matrix(state: StateVector, max_qubits: int = 12) -> np.ndarray:
    if state.n_qubits > max_qubits:
        raise TooLarge(f"density_matrix guarded at {max_qubits} qubits")
    return np.outer(state.amplitudes, state.amplitudes.conj())
