"""Group twirling and rotation-invariant feature analytics.

The twirled state of an amplitude-encoded sample is block diagonal over
Fourier sectors m, with one rank-1 N_r x N_r block per sector.  In the
pixel basis the same object is governed by the circular cross-ring
correlations C[r, r'](dphi).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevec as sv
from .eqmodel import ModelConfig, ModelParams, circuit_unitary, readout_observables
from .errors import NormZero, TooLarge
from .ringgrid import SampledImage, encode_amplitudes


@dataclass(frozen=True)
class FourierCoeffs:
    coeffs: np.ndarray  # (N_r, N_phi) complex, x~[r, m]
    norm: float


@dataclass(frozen=True)
class TwirledState:
    blocks: dict  # m -> (N_r, N_r) complex matrix, rank <= 1


@dataclass(frozen=True)
class CorrelationTable:
    values: np.ndarray  # (N_r, N_r, N_phi) real, C[r, r', dphi]


def fourier_coeffs(x: SampledImage) -> FourierCoeffs:
    """x~[r, m] = (1/sqrt(N_phi)) * sum_phi x[r, phi] * w^(-m*phi)."""
    return FourierCoeffs(np.fft.fft(x.values, axis=1, norm="ortho"), x.norm())


def twirl_blocks(x: SampledImage) -> TwirledState:
    nrm = x.norm()
    if nrm == 0.0:
        raise NormZero("cannot twirl an all-zero sample matrix")
    ft = np.fft.fft(x.values, axis=1, norm="ortho")
    blocks = {
        m: np.outer(ft[:, m], ft[:, m].conj()) / nrm**2
        for m in range(x.grid.n_angles)
    }
    return TwirledState(blocks)


def _shift_permutation(n_rad: int, n_orb: int, g: int) -> np.ndarray:
    """perm[i] = flat index of R(g)|i>, i.e. (r, phi) -> (r, phi + g)."""
    n_r, n_phi = 2**n_rad, 2**n_orb
    idx = np.arange(n_r * n_phi)
    r, phi = idx // n_phi, idx % n_phi
    return r * n_phi + (phi + g) % n_phi


def twirl_density_explicit(state: sv.StateVector, n_rad: int, n_orb: int,
                           max_qubits: int = 10) -> np.ndarray:
    """Brute-force twirl (1/N_phi) sum_g R(g) rho R(g)^dag in the pixel basis."""
    if state.n_qubits > max_qubits:
        raise TooLarge(f"twirl_density_explicit guarded at {max_qubits} qubits")
    return _twirl_matrix(sv.density_matrix(state, max_qubits), n_rad, n_orb)


def circular_correlations(x: SampledImage) -> CorrelationTable:
    """C[r, r', dphi] = sum_alpha x[r, alpha] * x[r', (alpha - dphi) mod N_phi]."""
    vals = x.values
    n_phi = x.grid.n_angles
    table = np.empty((vals.shape[0], vals.shape[0], n_phi))
    for dphi in range(n_phi):
        table[:, :, dphi] = vals @ np.roll(vals, dphi, axis=1).T
    return CorrelationTable(table)


def blocks_to_pixel_basis(ts: TwirledState, n_rad: int, n_orb: int) -> np.ndarray:
    """Change of basis of the block-diagonal twirl back to the pixel basis."""
    n_r, n_phi = 2**n_rad, 2**n_orb
    dim = n_r * n_phi
    fourier = np.zeros((dim, dim), dtype=complex)
    for m, block in ts.blocks.items():
        rows = np.arange(n_r) * n_phi + m
        fourier[np.ix_(rows, rows)] = block
    # coefficients satisfy x[phi] = (1/sqrt(N_phi)) sum_m w^(+m*phi) x~[m],
    # so pixel = V rho_F V^dag with V[phi, m] = w^(+m*phi)/sqrt(N_phi)
    phi = np.arange(n_phi)
    v_orb = np.exp(2j * np.pi * np.outer(phi, phi) / n_phi) / np.sqrt(n_phi)
    v = np.kron(np.eye(n_r), v_orb)
    return v @ fourier @ v.conj().T


def twirl_identity_check(
    cfg: ModelConfig,
    params: ModelParams,
    x: SampledImage,
    rogue_rotation: tuple[int, str, float] | None = None,
    max_qubits: int = 10,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Compare Tr[M U rho U^dag] with Tr[M U T(rho) U^dag] per class observable.

    Left side runs the statevector simulator; right side uses explicit
    matrices throughout.  Returns (lhs, rhs, max gap).
    """
    if cfg.n_qubits > max_qubits:
        raise TooLarge(f"twirl_identity_check guarded at {max_qubits} qubits")
    from .eqmodel import _apply_circuit, _prepare_state  # shared circuit internals

    state = _prepare_state(cfg, x)
    if rogue_rotation is not None:
        q, axis, angle = rogue_rotation
        sv.apply_rotation(state, q, axis, angle)
    state = _apply_circuit(cfg, params, state)
    lhs = np.array([sv.expectation(state, obs) for obs in readout_observables(cfg)])

    rho = sv.density_matrix(encode_amplitudes(x), max_qubits)
    twirled = _twirl_matrix(rho, cfg.n_rad, cfg.n_orb)
    u = circuit_unitary(cfg, params, include_dft=True, rogue_rotation=rogue_rotation,
                        max_qubits=max_qubits)
    evolved = u @ twirled @ u.conj().T
    rhs = np.array(
        [np.real(np.sum(obs.diag() * np.diag(evolved))) for obs in readout_observables(cfg)]
    )
    return lhs, rhs, float(np.max(np.abs(lhs - rhs)))


def _twirl_matrix(rho: np.ndarray, n_rad: int, n_orb: int) -> np.ndarray:
    n_phi = 2**n_orb
    out = np.zeros_like(rho)
    for g in range(n_phi):
        perm = _shift_permutation(n_rad, n_orb, g)
        out[np.ix_(perm, perm)] += rho
    return out / n_phi


def correlation_rows(x: SampledImage, ring_pairs) -> list[tuple[int, int, int, float]]:
    """(r, r', dphi, value) rows for the requested ring pairs."""
    table = circular_correlations(x).values
    rows = []
    for r, rp in ring_pairs:
        for dphi in range(x.grid.n_angles):
            rows.append((int(r), int(rp), dphi, float(table[r, rp, dphi])))
    return rows
