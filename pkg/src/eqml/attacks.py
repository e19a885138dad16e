"""FGSM/PGD crafting against surrogates and adversarial training-set construction.

Attacks operate on the flattened radial-orbital representation.  Default
clamp range is [0, 1] (sampled pixel values); pass clamp_range=None to
disable clamping.  sign(0) = 0 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, InvalidArgs
from .surrogate import surrogate_loss_grads


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "fgsm"  # "fgsm" | "pgd"
    epsilon: float = 0.1
    steps: int = 10
    step_size: float | None = None  # PGD default: max(epsilon/steps, 1e-3)
    clamp_range: tuple[float, float] | None = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("fgsm", "pgd"):
            raise InvalidArgs(f"unknown attack kind {self.kind!r}")
        if self.epsilon < 0:
            raise InvalidArgs("epsilon must be >= 0")
        if self.kind == "pgd" and self.steps < 1:
            raise InvalidArgs("PGD needs steps >= 1")
        if self.step_size is not None and self.step_size <= 0:
            raise InvalidArgs("step_size must be > 0")

    def alpha(self) -> float:
        if self.step_size is not None:
            return self.step_size
        return max(self.epsilon / self.steps, 1e-3)


def _clamp(x: np.ndarray, clamp_range) -> np.ndarray:
    if clamp_range is None:
        return x
    return np.clip(x, clamp_range[0], clamp_range[1])


def _input_grads(surrogate, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _, _, grads = surrogate_loss_grads(surrogate, x, y)
    return np.atleast_2d(grads)


def fgsm(surrogate, x_flat: np.ndarray, y, cfg: AttackConfig) -> np.ndarray:
    """x_adv = clamp(x + epsilon * sign(grad_x L)); works on one input or a batch."""
    x = np.atleast_2d(np.asarray(x_flat, dtype=float))
    yv = np.atleast_1d(np.asarray(y, dtype=int))
    adv = _clamp(x + cfg.epsilon * np.sign(_input_grads(surrogate, x, yv)), cfg.clamp_range)
    return adv[0] if np.asarray(x_flat).ndim == 1 else adv


def pgd(surrogate, x_flat: np.ndarray, y, cfg: AttackConfig) -> np.ndarray:
    """Iterated signed steps projected onto the epsilon-ball around the input.

    No random start: the first iterate departs from the clean point.
    """
    x0 = np.atleast_2d(np.asarray(x_flat, dtype=float))
    yv = np.atleast_1d(np.asarray(y, dtype=int))
    lo, hi = x0 - cfg.epsilon, x0 + cfg.epsilon
    alpha = cfg.alpha()
    x = x0.copy()
    for _ in range(cfg.steps):
        x = x + alpha * np.sign(_input_grads(surrogate, x, yv))
        x = _clamp(x, cfg.clamp_range)
        x = np.clip(x, lo, hi)
    return x[0] if np.asarray(x_flat).ndim == 1 else x


def attack(surrogate, x_flat: np.ndarray, y, cfg: AttackConfig) -> np.ndarray:
    return fgsm(surrogate, x_flat, y, cfg) if cfg.kind == "fgsm" else pgd(surrogate, x_flat, y, cfg)


def build_adv_training_set(
    x: np.ndarray,
    y: np.ndarray,
    lc_surrogate,
    fraction: float = 0.5,
    eps_range: tuple[float, float] = (0.05, 0.2),
    seed: int = 0,
    clamp_range: tuple[float, float] | None = (0.0, 1.0),
) -> tuple[np.ndarray, np.ndarray]:
    """Replace a seeded-uniform subset with FGSM-on-LC counterparts.

    Per-sample budgets are drawn uniformly from eps_range; labels are kept.
    Returns (perturbed inputs, labels); the label array is shared, not copied.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyDataset("dataset must be nonempty")
    if not 0.0 <= fraction <= 1.0:
        raise InvalidArgs("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_pick = round(fraction * len(x))
    picked = np.sort(rng.choice(len(x), size=n_pick, replace=False))
    out = x.copy()
    for idx in picked:
        eps = float(rng.uniform(eps_range[0], eps_range[1]))
        cfg = AttackConfig(kind="fgsm", epsilon=eps, clamp_range=clamp_range)
        out[idx] = fgsm(lc_surrogate, x[idx], y[idx], cfg)
    return out, y
