"""Diagnostic input transformations and obfuscation-key machinery.

T1 scrambles every ring with the same random real orthogonal circulant
map (invariance-preserving), T2 permutes each ring independently
(mean-preserving, correlation-breaking), T3 removes ring means
(mean-erasing, correlation-preserving up to an offset).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgs
from .ringgrid import SampledImage


@dataclass(frozen=True)
class CirculantKey:
    lam: np.ndarray  # N_phi unit-modulus phases, lam[0] = 1, conjugate-symmetric

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex)
        n = len(lam)
        if not np.allclose(np.abs(lam), 1.0, atol=1e-12):
            raise InvalidArgs("all phases must have unit modulus")
        if abs(lam[0] - 1.0) > 1e-12:
            raise InvalidArgs("lam[0] must equal 1")
        if not np.allclose(lam[(n - np.arange(n)) % n], lam.conj(), atol=1e-12):
            raise InvalidArgs("phases must be conjugate-symmetric")
        if n % 2 == 0 and abs(lam[n // 2].imag) > 1e-12:
            raise InvalidArgs("lam[N/2] must be +-1")
        object.__setattr__(self, "lam", lam)

    @property
    def n_phi(self) -> int:
        return len(self.lam)


@dataclass(frozen=True)
class PermutationKey:
    perms: np.ndarray  # (N_r, N_phi) integer, one angular permutation per ring

    def __post_init__(self):
        perms = np.asarray(self.perms, dtype=int)
        for row in perms:
            if sorted(row) != list(range(perms.shape[1])):
                raise InvalidArgs("each row must be a permutation of 0..N_phi-1")
        object.__setattr__(self, "perms", perms)


def identity_circulant_key(n_orb: int) -> CirculantKey:
    return CirculantKey(np.ones(2**n_orb, dtype=complex))


def sample_circulant_key(n_orb: int, rng: np.random.Generator) -> CirculantKey:
    n_phi = 2**n_orb
    lam = np.ones(n_phi, dtype=complex)
    for m in range(1, n_phi // 2):
        phase = np.exp(1j * rng.uniform(0.0, 2 * np.pi))
        lam[m] = phase
        lam[n_phi - m] = phase.conjugate()
    lam[n_phi // 2] = 1.0 if rng.uniform() < 0.5 else -1.0
    return CirculantKey(lam)


def sample_permutation_key(n_rad: int, n_orb: int, rng: np.random.Generator) -> PermutationKey:
    n_r, n_phi = 2**n_rad, 2**n_orb
    return PermutationKey(np.stack([rng.permutation(n_phi) for _ in range(n_r)]))


def circulant_matrix(key: CirculantKey) -> np.ndarray:
    """O(lam) = F^dag diag(lam) F, real orthogonal by the key invariants."""
    n = key.n_phi
    phi = np.arange(n)
    f = np.exp(-2j * np.pi * np.outer(phi, phi) / n) / np.sqrt(n)
    o = f.conj().T @ np.diag(key.lam) @ f
    return o.real


def apply_t1(x: SampledImage, key: CirculantKey) -> SampledImage:
    """Same orthogonal circulant map on every ring: x'_r = O(lam) x_r."""
    o = circulant_matrix(key)
    return SampledImage(x.grid, x.values @ o.T)


def apply_t2(x: SampledImage, key: PermutationKey) -> SampledImage:
    """Independent angular reordering per ring: x'[r, phi] = x[r, perms[r][phi]]."""
    vals = np.stack([x.values[r, key.perms[r]] for r in range(x.values.shape[0])])
    return SampledImage(x.grid, vals)


def apply_t3(x: SampledImage) -> SampledImage:
    """Ring-wise mean removal: x'_r = x_r - mean(x_r)."""
    return SampledImage(x.grid, x.values - x.values.mean(axis=1, keepdims=True))


def candidate_preimage(x_scrambled: SampledImage, guess: CirculantKey) -> SampledImage:
    """Preimage consistent with the released image under the guessed key."""
    o = circulant_matrix(guess)
    return SampledImage(x_scrambled.grid, x_scrambled.values @ o)


def circulant_key_to_json(key: CirculantKey) -> str:
    return json.dumps({"phases": [[z.real, z.imag] for z in key.lam]})


def circulant_key_from_json(doc: str) -> CirculantKey:
    pairs = json.loads(doc)["phases"]
    return CirculantKey(np.array([complex(re, im) for re, im in pairs]))


def permutation_key_to_json(key: PermutationKey) -> str:
    return json.dumps({"permutations": key.perms.tolist()})


def permutation_key_from_json(doc: str) -> PermutationKey:
    return PermutationKey(np.array(json.loads(doc)["permutations"], dtype=int))
