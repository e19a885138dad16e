"""The rotationally equivariant classifier.

Pipeline: amplitude encoding -> inverse DFT on the orbital register ->
D layers of (Rx, Ry, Rz) on each radial qubit followed by a CZ chain ->
one Z expectation per class on the radial register, optionally with the
m=0 orbital sector projected out of the readout.

Every gate that touches the orbital register (CZ, and nothing else) is
diagonal in the computational basis, hence diagonal in the Fourier basis
of the group action, which keeps the whole circuit equivariant under
cyclic shifts of the angular index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import statevec as sv
from .errors import DimMismatch, InvalidArgs, LabelOutOfRange, TooLarge
from .ringgrid import SampledImage, encode_amplitudes

CHECKPOINT_FORMAT_VERSION = 1


def default_cz_chain(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Nearest-neighbour chain (q, q+1) spanning the radial-orbital boundary."""
    return tuple((q, q + 1) for q in range(n_qubits - 1))


@dataclass(frozen=True)
class ModelConfig:
    n_rad: int
    n_orb: int
    depth: int
    n_classes: int
    readout_mode: str = "standard"  # "standard" | "m0_suppressed"
    logit_scale: float = 1.0
    cz_topology: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.n_classes > self.n_rad:
            raise InvalidArgs(f"n_classes={self.n_classes} must be <= n_rad={self.n_rad}")
        if self.readout_mode not in ("standard", "m0_suppressed"):
            raise InvalidArgs(f"unknown readout_mode {self.readout_mode!r}")
        n = self.n_rad + self.n_orb
        topo = self.cz_topology if self.cz_topology is not None else default_cz_chain(n)
        topo = tuple((int(a), int(b)) for a, b in topo)
        for a, b in topo:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise InvalidArgs(f"invalid CZ pair ({a}, {b}) for {n} qubits")
        object.__setattr__(self, "cz_topology", topo)

    @property
    def n_qubits(self) -> int:
        return self.n_rad + self.n_orb


@dataclass
class ModelParams:
    theta: np.ndarray  # (depth, n_rad, 3) angles for (Rx, Ry, Rz)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not np.all(np.isfinite(self.theta)):
            raise InvalidArgs("theta must be finite")

    def copy(self) -> "ModelParams":
        return ModelParams(self.theta.copy())


def init_params(cfg: ModelConfig, seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-np.pi, np.pi, size=(cfg.depth, cfg.n_rad, 3))
    return ModelParams(theta)


_AXES = ("X", "Y", "Z")


def _gate_sequence(cfg: ModelConfig):
    """Flat list of circuit gates after the orbital DFT, in application order."""
    gates = []
    for i in range(cfg.depth):
        for q in range(cfg.n_rad):
            for k in range(3):
                gates.append(("rot", _AXES[k], q, (i, q, k)))
        for a, b in cfg.cz_topology:
            gates.append(("cz", a, b))
    return gates


def _prepare_state(cfg: ModelConfig, x: SampledImage) -> sv.StateVector:
    if (x.grid.n_rad, x.grid.n_orb) != (cfg.n_rad, cfg.n_orb):
        raise DimMismatch(
            f"sample grid ({x.grid.n_rad},{x.grid.n_orb}) does not match "
            f"model ({cfg.n_rad},{cfg.n_orb})"
        )
    state = encode_amplitudes(x)
    return sv.apply_orbital_dft_inverse(state, cfg.n_rad, cfg.n_orb)


def _apply_circuit(cfg: ModelConfig, params: ModelParams, state: sv.StateVector) -> sv.StateVector:
    for gate in _gate_sequence(cfg):
        if gate[0] == "rot":
            _, axis, q, (i, qq, k) = gate
            sv.apply_rotation(state, q, axis, params.theta[i, qq, k])
        else:
            sv.apply_cz(state, gate[1], gate[2])
    return state


def readout_observables(cfg: ModelConfig) -> list[sv.Observable]:
    suppress = cfg.readout_mode == "m0_suppressed"
    return [sv.Observable(j, cfg.n_rad, cfg.n_orb, suppress) for j in range(cfg.n_classes)]


def forward(cfg: ModelConfig, params: ModelParams, x: SampledImage) -> np.ndarray:
    state = _apply_circuit(cfg, params, _prepare_state(cfg, x))
    return _logits_from_state(cfg, state)


def _logits_from_state(cfg: ModelConfig, state: sv.StateVector) -> np.ndarray:
    probs = np.abs(state.amplitudes) ** 2
    return cfg.logit_scale * np.array(
        [np.dot(obs.diag(), probs) for obs in readout_observables(cfg)]
    )


def predict(cfg: ModelConfig, params: ModelParams, x: SampledImage) -> int:
    return int(np.argmax(forward(cfg, params, x)))  # argmax breaks ties at lowest index


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def cross_entropy(logits: np.ndarray, y: int) -> float:
    if not 0 <= y < len(logits):
        raise LabelOutOfRange(f"label {y} out of range for {len(logits)} classes")
    z = logits - logits.max()
    return float(np.log(np.exp(z).sum()) - z[y])


def loss(cfg: ModelConfig, params: ModelParams, x: SampledImage, y: int) -> float:
    return cross_entropy(forward(cfg, params, x), int(y))


def loss_and_gradient(
    cfg: ModelConfig, params: ModelParams, x: SampledImage, y: int
) -> tuple[float, np.ndarray]:
    """Adjoint-mode gradient of the cross-entropy loss w.r.t. every angle.

    The effective readout sum_j (p_j - onehot_j) * scale * M_j is diagonal,
    so one reverse pass over the circuit yields the exact gradient.
    """
    y = int(y)
    if not 0 <= y < cfg.n_classes:
        raise LabelOutOfRange(f"label {y} out of range for {cfg.n_classes} classes")
    psi = _apply_circuit(cfg, params, _prepare_state(cfg, x))
    probs = np.abs(psi.amplitudes) ** 2
    diags = [obs.diag() for obs in readout_observables(cfg)]
    logits = cfg.logit_scale * np.array([np.dot(d, probs) for d in diags])
    p = _softmax(logits)
    loss_val = cross_entropy(logits, y)

    dl_dlogit = p.copy()
    dl_dlogit[y] -= 1.0
    diag_eff = cfg.logit_scale * sum(c * d for c, d in zip(dl_dlogit, diags))

    grad = np.zeros_like(params.theta)
    lam = sv.StateVector(psi.n_qubits, diag_eff * psi.amplitudes)
    for gate in reversed(_gate_sequence(cfg)):
        if gate[0] == "cz":
            sv.apply_cz(psi, gate[1], gate[2])
            sv.apply_cz(lam, gate[1], gate[2])
        else:
            _, axis, q, (i, qq, k) = gate
            mu = psi.copy()
            sv.apply_pauli(mu, q, axis)
            grad[i, qq, k] = 2.0 * np.real(np.vdot(lam.amplitudes, -0.5j * mu.amplitudes))
            angle = params.theta[i, qq, k]
            sv.apply_rotation(psi, q, axis, -angle)
            sv.apply_rotation(lam, q, axis, -angle)
    return loss_val, grad


def gradient(cfg: ModelConfig, params: ModelParams, x: SampledImage, y: int) -> np.ndarray:
    return loss_and_gradient(cfg, params, x, y)[1]


def circuit_unitary(
    cfg: ModelConfig,
    params: ModelParams,
    include_dft: bool = True,
    rogue_rotation: tuple[int, str, float] | None = None,
    max_qubits: int = 10,
) -> np.ndarray:
    """Explicit matrix of the circuit (optionally prefixed by the orbital DFT).

    rogue_rotation = (qubit, axis, angle) inserts a deliberately
    non-equivariant gate between the DFT and the variational layers; used
    as a negative control in twirl checks.  (Placed there rather than at
    the end: the readout traces out the orbital register, so a final
    orbital-only gate would be invisible.)
    """
    n = cfg.n_qubits
    if n > max_qubits:
        raise TooLarge(f"circuit_unitary guarded at {max_qubits} qubits")
    dim = 2**n
    cols = []
    for idx in range(dim):
        state = sv.basis_state(n, idx)
        if include_dft:
            sv.apply_orbital_dft_inverse(state, cfg.n_rad, cfg.n_orb)
        if rogue_rotation is not None:
            q, axis, angle = rogue_rotation
            sv.apply_rotation(state, q, axis, angle)
        _apply_circuit(cfg, params, state)
        cols.append(state.amplitudes)
    return np.stack(cols, axis=1)


def save_checkpoint(cfg: ModelConfig, params: ModelParams, path) -> None:
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "n_rad": cfg.n_rad,
        "n_orb": cfg.n_orb,
        "depth": cfg.depth,
        "n_classes": cfg.n_classes,
        "readout_mode": cfg.readout_mode,
        "logit_scale": cfg.logit_scale,
        "cz_topology": [list(p) for p in cfg.cz_topology],
        "theta": params.theta.reshape(-1).tolist(),  # row-major (i, q, k)
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> tuple[ModelConfig, ModelParams]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise InvalidArgs(
            f"unsupported checkpoint format_version {doc.get('format_version')!r}"
        )
    cfg = ModelConfig(
        n_rad=doc["n_rad"],
        n_orb=doc["n_orb"],
        depth=doc["depth"],
        n_classes=doc["n_classes"],
        readout_mode=doc["readout_mode"],
        logit_scale=doc["logit_scale"],
        cz_topology=tuple(tuple(p) for p in doc["cz_topology"]),
    )
    theta = np.array(doc["theta"], dtype=float).reshape(cfg.depth, cfg.n_rad, 3)
    return cfg, ModelParams(theta)
