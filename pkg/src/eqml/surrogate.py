"""Classical surrogate models on the flattened radial-orbital representation.

A linear classifier and a one-hidden-layer ReLU MLP, trained from scratch
with AdamW, with exact analytic gradients w.r.t. parameters and inputs
(the input gradients drive attack crafting).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyDataset, InvalidArgs, LabelOutOfRange, ZeroWeights

SURROGATE_FORMAT_VERSION = 1


@dataclass
class LinearModel:
    w: np.ndarray  # (n_classes, d_in), columns in flat r*N_phi + phi order
    b: np.ndarray  # (n_classes,)

    def params(self) -> dict:
        return {"w": self.w, "b": self.b}

    def copy(self) -> "LinearModel":
        return LinearModel(self.w.copy(), self.b.copy())


@dataclass
class MlpModel:
    w1: np.ndarray  # (hidden, d_in)
    b1: np.ndarray
    w2: np.ndarray  # (n_classes, hidden)
    b2: np.ndarray

    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "MlpModel":
        return MlpModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def init_linear(n_classes: int, d_in: int, seed: int) -> LinearModel:
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d_in)
    return LinearModel(rng.uniform(-bound, bound, (n_classes, d_in)), np.zeros(n_classes))


def init_mlp(n_classes: int, d_in: int, seed: int, hidden: int = 256) -> MlpModel:
    rng = np.random.default_rng(seed)
    b1 = 1.0 / np.sqrt(d_in)
    b2 = 1.0 / np.sqrt(hidden)
    return MlpModel(
        rng.uniform(-b1, b1, (hidden, d_in)),
        np.zeros(hidden),
        rng.uniform(-b2, b2, (n_classes, hidden)),
        np.zeros(n_classes),
    )


def surrogate_forward(model, x_flat: np.ndarray) -> np.ndarray:
    """Logits for one flat input or a batch (rows are samples)."""
    x = np.atleast_2d(np.asarray(x_flat, dtype=float))
    if isinstance(model, LinearModel):
        if x.shape[1] != model.w.shape[1]:
            raise DimMismatch(f"input dim {x.shape[1]} != {model.w.shape[1]}")
        logits = x @ model.w.T + model.b
    elif isinstance(model, MlpModel):
        if x.shape[1] != model.w1.shape[1]:
            raise DimMismatch(f"input dim {x.shape[1]} != {model.w1.shape[1]}")
        h = np.maximum(x @ model.w1.T + model.b1, 0.0)
        logits = h @ model.w2.T + model.b2
    else:
        raise InvalidArgs(f"unknown surrogate type {type(model).__name__}")
    return logits[0] if np.asarray(x_flat).ndim == 1 else logits


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def surrogate_loss_grads(model, batch: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy, parameter gradients, and per-sample input gradients.

    Input gradients are of the per-sample loss (not divided by batch size),
    which is what attack crafting consumes.
    """
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    if x.shape[0] == 0:
        raise EmptyDataset("batch must be nonempty")
    if x.shape[0] != len(y):
        raise DimMismatch(f"{x.shape[0]} inputs vs {len(y)} labels")
    n = x.shape[0]

    if isinstance(model, LinearModel):
        logits = surrogate_forward(model, x)
        n_classes = model.w.shape[0]
        if y.min() < 0 or y.max() >= n_classes:
            raise LabelOutOfRange(f"labels must lie in 0..{n_classes - 1}")
        p = _softmax_rows(logits)
        loss = float(-np.log(p[np.arange(n), y] + 0.0).sum() / n)
        delta = p.copy()
        delta[np.arange(n), y] -= 1.0  # dL_i/dlogit
        grads = {"w": delta.T @ x / n, "b": delta.mean(axis=0)}
        input_grads = delta @ model.w
    elif isinstance(model, MlpModel):
        n_classes = model.w2.shape[0]
        if y.min() < 0 or y.max() >= n_classes:
            raise LabelOutOfRange(f"labels must lie in 0..{n_classes - 1}")
        pre = x @ model.w1.T + model.b1
        h = np.maximum(pre, 0.0)
        logits = h @ model.w2.T + model.b2
        p = _softmax_rows(logits)
        loss = float(-np.log(p[np.arange(n), y]).sum() / n)
        delta = p.copy()
        delta[np.arange(n), y] -= 1.0
        dh = (delta @ model.w2) * (pre > 0)
        grads = {
            "w2": delta.T @ h / n,
            "b2": delta.mean(axis=0),
            "w1": dh.T @ x / n,
            "b1": dh.mean(axis=0),
        }
        input_grads = dh @ model.w1
    else:
        raise InvalidArgs(f"unknown surrogate type {type(model).__name__}")

    if np.asarray(batch).ndim == 1:
        input_grads = input_grads[0]
    return loss, grads, input_grads


@dataclass
class OptimizerState:
    """AdamW: adaptive moments with decoupled weight decay."""

    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(params: dict, grads: dict, opt: OptimizerState) -> None:
    opt.step += 1
    t = opt.step
    for name, p in params.items():
        g = grads[name]
        if name not in opt.m:
            opt.m[name] = np.zeros_like(p)
            opt.v[name] = np.zeros_like(p)
        opt.m[name] = opt.beta1 * opt.m[name] + (1 - opt.beta1) * g
        opt.v[name] = opt.beta2 * opt.v[name] + (1 - opt.beta2) * g**2
        m_hat = opt.m[name] / (1 - opt.beta1**t)
        v_hat = opt.v[name] / (1 - opt.beta2**t)
        p -= opt.lr * (m_hat / (np.sqrt(v_hat) + opt.eps) + opt.weight_decay * p)


def accuracy(model, x: np.ndarray, y: np.ndarray) -> float:
    logits = np.atleast_2d(surrogate_forward(model, x))
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(y)))


def train_surrogate(
    model,
    x: np.ndarray,
    y: np.ndarray,
    opt: OptimizerState,
    epochs: int,
    batch_size: int = 128,
    seed: int = 0,
    eval_set: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Seeded mini-batch training; returns (best checkpoint, per-epoch history).

    The retained checkpoint is the one with the highest accuracy on
    eval_set when given, otherwise on the training data.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyDataset("training set must be nonempty")
    rng = np.random.default_rng(seed)
    history = []
    best = model.copy()
    best_acc = -1.0
    for _ in range(epochs):
        order = rng.permutation(len(x))
        losses = []
        for start in range(0, len(x), batch_size):
            batch = order[start:start + batch_size]
            loss, grads, _ = surrogate_loss_grads(model, x[batch], y[batch])
            adamw_step(model.params(), grads, opt)
            losses.append(loss)
        eval_x, eval_y = eval_set if eval_set is not None else (x, y)
        acc = accuracy(model, eval_x, eval_y)
        history.append({"loss": float(np.mean(losses)), "accuracy": acc})
        if acc > best_acc:
            best_acc = acc
            best = model.copy()
    if epochs == 0:
        best = model.copy()
    return best, history


def ring_invariance_score(model: LinearModel, n_rad: int, n_orb: int) -> float:
    """1 - ||W - Pi_ring W||_F / ||W||_F; 1 means ring-constant weights."""
    if not isinstance(model, LinearModel):
        raise InvalidArgs("ring_invariance_score is defined for the linear classifier")
    n_r, n_phi = 2**n_rad, 2**n_orb
    w = model.w.reshape(model.w.shape[0], n_r, n_phi)
    total = np.linalg.norm(w)
    if total == 0.0:
        raise ZeroWeights("weight matrix is identically zero")
    residual = w - w.mean(axis=2, keepdims=True)
    return float(1.0 - np.linalg.norm(residual) / total)


def _pack_arrays(arrays: dict) -> tuple[list, bytes]:
    layout, blob = [], b""
    for name, arr in arrays.items():
        layout.append({"name": name, "shape": list(arr.shape)})
        blob += arr.astype("<f4").tobytes()
    return layout, blob


def save_surrogate(model, path) -> None:
    """JSON header followed by a little-endian float32 weight blob."""
    kind = "linear" if isinstance(model, LinearModel) else "mlp"
    layout, blob = _pack_arrays(model.params())
    header = json.dumps(
        {"format_version": SURROGATE_FORMAT_VERSION, "kind": kind, "arrays": layout}
    ).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(blob)


def load_surrogate(path):
    with open(path, "rb") as fh:
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        if header.get("format_version") != SURROGATE_FORMAT_VERSION:
            raise InvalidArgs(f"unsupported surrogate format {header.get('format_version')!r}")
        arrays = {}
        for spec in header["arrays"]:
            count = int(np.prod(spec["shape"]))
            data = np.frombuffer(fh.read(4 * count), dtype="<f4")
            arrays[spec["name"]] = data.reshape(spec["shape"]).astype(float)
    if header["kind"] == "linear":
        return LinearModel(arrays["w"], arrays["b"])
    return MlpModel(arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"])
