"""Training loop for the quantum model, protocol matrix, and attack sweeps."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import attacks as atk
from . import data as dt
from . import eqmodel as eq
from . import surrogate as sg
from .errors import EmptyDataset, InvalidArgs
from .ringgrid import build_grid

CSV_HEADER = "dataset,train_variant,eval_variant,surrogate,attack,epsilon,seed,accuracy,n_eval"


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    train_variant: str
    eval_variant: str
    surrogate: str
    attack: str
    epsilon: float
    seed: int
    accuracy: float
    n_eval: int

    def __post_init__(self):
        # plain floats keep repr() output stable in the CSV serialization
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "accuracy", float(self.accuracy))

    def csv(self) -> str:
        return (
            f"{self.dataset},{self.train_variant},{self.eval_variant},"
            f"{self.surrogate},{self.attack},{self.epsilon!r},{self.seed},"
            f"{self.accuracy!r},{self.n_eval}"
        )


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_name: str = "synth-rings"
    n_classes: int = 2
    train_per_class: int = 120
    test_per_class: int = 40
    noise_sigma: float = 0.10
    n_rad: int = 3
    n_orb: int = 3
    height: int = 32
    width: int = 32
    depth: int = 8
    readout_mode: str = "standard"
    logit_scale: float = 6.0
    epochs: int = 8
    batch_size: int = 16
    lr: float = 3e-3
    seeds: tuple[int, ...] = (0, 1, 2)
    variants: tuple[str, ...] = ("clean", "t1", "t2", "t3")
    surrogate_kind: str = "lc"
    surrogate_epochs: int = 40
    attack_kind: str = "pgd"
    eps_grid: tuple[float, ...] = tuple(np.round(np.arange(0, 0.301, 0.025), 6))
    threads: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise InvalidArgs("seed list must be nonempty")
        grid = tuple(self.eps_grid)
        if not grid or grid[0] != 0.0 or list(grid) != sorted(grid):
            raise InvalidArgs("eps grid must be ascending and start at 0")
        object.__setattr__(self, "eps_grid", grid)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def grid(self):
        return build_grid(self.n_rad, self.n_orb, self.height, self.width)

    def model_cfg(self, readout_mode: str | None = None) -> eq.ModelConfig:
        return eq.ModelConfig(
            n_rad=self.n_rad,
            n_orb=self.n_orb,
            depth=self.depth,
            n_classes=self.n_classes,
            readout_mode=readout_mode or self.readout_mode,
            logit_scale=self.logit_scale,
        )


def desk_scale_preset(**overrides) -> ExperimentConfig:
    """Small configuration that runs the full protocol matrix in minutes."""
    return replace(ExperimentConfig(), **overrides)


def resolve_threads(requested: int | None) -> int:
    env = os.environ.get("EQML_THREADS")
    if env is not None:
        return max(1, int(env))
    return max(1, requested or 1)


def make_datasets(cfg: ExperimentConfig, seed: int) -> tuple[dt.Dataset, dt.Dataset]:
    grid = cfg.grid()
    train = dt.synth_stm_like(cfg.n_classes, cfg.train_per_class, cfg.noise_sigma, grid, seed)
    test = dt.synth_stm_like(
        cfg.n_classes, cfg.test_per_class, cfg.noise_sigma, grid, seed + 10_000
    )
    return train, test


def train_quantum(
    model_cfg: eq.ModelConfig,
    dataset: dt.Dataset,
    seed: int,
    epochs: int = 10,
    batch_size: int = 16,
    lr: float = 3e-3,
) -> tuple[eq.ModelParams, list[dict]]:
    """Seeded mini-batch Adam training; keeps the best-train-accuracy params."""
    if len(dataset) == 0:
        raise EmptyDataset("training set must be nonempty")
    params = eq.init_params(model_cfg, seed)
    opt = sg.OptimizerState(lr=lr, weight_decay=0.0)
    rng = np.random.default_rng(seed)
    history: list[dict] = []
    best = params.copy()
    best_acc = -1.0
    for _ in range(epochs):
        order = rng.permutation(len(dataset))
        losses = []
        n_correct = 0
        for start in range(0, len(dataset), batch_size):
            batch = np.sort(order[start:start + batch_size])  # fixed accumulation order
            grad = np.zeros_like(params.theta)
            for i in batch:
                loss_i, g_i = eq.loss_and_gradient(
                    model_cfg, params, dataset.sample(i), int(dataset.labels[i])
                )
                grad += g_i
                losses.append(loss_i)
            grad /= len(batch)
            sg.adamw_step({"theta": params.theta}, {"theta": grad}, opt)
        for i in range(len(dataset)):
            if eq.predict(model_cfg, params, dataset.sample(i)) == dataset.labels[i]:
                n_correct += 1
        acc = n_correct / len(dataset)
        history.append({"loss": float(np.mean(losses)), "accuracy": acc})
        if acc > best_acc:
            best_acc = acc
            best = params.copy()
    return best, history


def evaluate(model_cfg: eq.ModelConfig, params: eq.ModelParams, dataset: dt.Dataset) -> float:
    if len(dataset) == 0:
        raise EmptyDataset("evaluation set must be nonempty")
    correct = sum(
        eq.predict(model_cfg, params, dataset.sample(i)) == dataset.labels[i]
        for i in range(len(dataset))
    )
    return float(correct) / len(dataset)


def protocol_matrix(cfg: ExperimentConfig) -> list[ResultRow]:
    """Both panels of the protocol accuracy table over all variants and seeds.

    Panel (a): train clean, evaluate on each transformed test set.
    Panel (b): train on each transformed training set, evaluate clean.
    """
    model_cfg = cfg.model_cfg()
    rows: list[ResultRow] = []
    for seed in cfg.seeds:
        train, test = make_datasets(cfg, seed)
        clean_params, _ = train_quantum(
            model_cfg, train, seed, cfg.epochs, cfg.batch_size, cfg.lr
        )
        for variant in cfg.variants:
            test_v = dt.apply_variant(test, variant, seed=seed + 1)
            rows.append(
                ResultRow(cfg.dataset_name, "clean", variant, "none", "none", 0.0,
                          seed, evaluate(model_cfg, clean_params, test_v), len(test_v))
            )
        for variant in cfg.variants:
            if variant == "clean":
                continue
            train_v = dt.apply_variant(train, variant, seed=seed + 2)
            params_v, _ = train_quantum(
                model_cfg, train_v, seed, cfg.epochs, cfg.batch_size, cfg.lr
            )
            rows.append(
                ResultRow(cfg.dataset_name, variant, "clean", "none", "none", 0.0,
                          seed, evaluate(model_cfg, params_v, test), len(test))
            )
    return rows


def train_surrogate_for(cfg: ExperimentConfig, train: dt.Dataset, seed: int):
    d_in = train.grid.n_rings * train.grid.n_angles
    if cfg.surrogate_kind == "lc":
        model = sg.init_linear(cfg.n_classes, d_in, seed)
    elif cfg.surrogate_kind == "mlp":
        model = sg.init_mlp(cfg.n_classes, d_in, seed)
    else:
        raise InvalidArgs(f"unknown surrogate kind {cfg.surrogate_kind!r}")
    opt = sg.OptimizerState(lr=1e-2 if cfg.surrogate_kind == "lc" else 1e-3)
    model, _ = sg.train_surrogate(
        model, train.flat(), train.labels, opt, cfg.surrogate_epochs,
        batch_size=128, seed=seed,
    )
    return model


def transfer_sweep(
    cfg: ExperimentConfig,
    model_cfg: eq.ModelConfig,
    target_params: eq.ModelParams,
    surrogate_model,
    test: dt.Dataset,
    seed: int,
    train_variant: str = "clean",
    threads: int = 1,
) -> list[ResultRow]:
    """Accuracy-vs-epsilon curves: surrogate white-box baseline and transfer."""
    x, y = test.flat(), test.labels

    def one_eps(eps: float) -> list[ResultRow]:
        acfg = atk.AttackConfig(kind=cfg.attack_kind, epsilon=float(eps))
        x_adv = atk.attack(surrogate_model, x, y, acfg) if eps > 0 else x
        wb_acc = sg.accuracy(surrogate_model, x_adv, y)
        adv_ds = dt.Dataset(test.grid, x_adv.reshape(test.values.shape), y,
                            {**test.meta, "attack": cfg.attack_kind, "epsilon": float(eps)})
        tr_acc = evaluate(model_cfg, target_params, adv_ds)
        return [
            ResultRow(cfg.dataset_name, train_variant, "whitebox", cfg.surrogate_kind,
                      cfg.attack_kind, float(eps), seed, wb_acc, len(y)),
            ResultRow(cfg.dataset_name, train_variant, "transfer", cfg.surrogate_kind,
                      cfg.attack_kind, float(eps), seed, tr_acc, len(y)),
        ]

    threads = resolve_threads(threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(one_eps, cfg.eps_grid))
    else:
        chunks = [one_eps(eps) for eps in cfg.eps_grid]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.eval_variant, r.epsilon))
    return rows


def sweep_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Full sweep over seeds: train target + surrogate per seed, then sweep."""
    model_cfg = cfg.model_cfg()
    rows: list[ResultRow] = []
    for seed in cfg.seeds:
        train, test = make_datasets(cfg, seed)
        params, _ = train_quantum(model_cfg, train, seed, cfg.epochs, cfg.batch_size, cfg.lr)
        surrogate_model = train_surrogate_for(cfg, train, seed)
        rows.extend(
            transfer_sweep(cfg, model_cfg, params, surrogate_model, test, seed,
                           threads=threads)
        )
    rows.sort(key=lambda r: (r.train_variant, r.eval_variant, r.epsilon, r.seed))
    return rows


def rows_to_csv(rows: list[ResultRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv() for r in rows]) + "\n"


def rows_from_csv(text: str) -> list[ResultRow]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidArgs("unrecognized results CSV header")
    rows = []
    for ln in lines[1:]:
        ds, tv, ev, sur, attack, eps, seed, acc, n_eval = ln.split(",")
        rows.append(ResultRow(ds, tv, ev, sur, attack, float(eps), int(seed),
                              float(acc), int(n_eval)))
    return rows
