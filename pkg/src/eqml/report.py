"""Aggregation of raw result rows into table panels and sweep series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingBaseline
from .harness import ResultRow
from .ringgrid import SampledImage
from .twirl import correlation_rows


@dataclass(frozen=True)
class PanelCell:
    panel: str  # "a" (train clean) | "b" (test clean)
    dataset: str
    variant: str
    mean: float
    std: float
    delta: float  # variant minus clean baseline, rounded at presentation

    def formatted(self) -> str:
        return f"{self.mean:.2f} +- {self.std:.2f} ({self.delta:+.2f})"


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.array(values)
    return float(arr.mean()), float(arr.std())


def table1_panels(rows: list[ResultRow]) -> list[PanelCell]:
    """Per (panel, dataset, variant): mean, std, and signed delta vs clean."""
    grouped: dict[tuple, list[float]] = {}
    for r in rows:
        if r.surrogate != "none":
            continue
        if r.train_variant == "clean":
            key = ("a", r.dataset, r.eval_variant)
        elif r.eval_variant == "clean":
            key = ("b", r.dataset, r.train_variant)
        else:
            continue
        grouped.setdefault(key, []).append(r.accuracy)

    cells = []
    for (panel, dataset, variant), vals in sorted(grouped.items()):
        base_key = ("a", dataset, "clean")
        if base_key not in grouped:
            raise MissingBaseline(f"no clean baseline rows for dataset {dataset!r}")
        base_mean, _ = _mean_std(grouped[base_key])
        mean, std = _mean_std(vals)
        cells.append(PanelCell(panel, dataset, variant, mean, std, mean - base_mean))
    return cells


@dataclass(frozen=True)
class SweepSeries:
    dataset: str
    train_variant: str
    eval_variant: str
    surrogate: str
    attack: str
    epsilons: tuple[float, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]


def sweep_series(rows: list[ResultRow]) -> list[SweepSeries]:
    """Group attack rows into per-curve (epsilon, mean, std) series."""
    grouped: dict[tuple, dict[float, list[float]]] = {}
    for r in rows:
        if r.surrogate == "none":
            continue
        key = (r.dataset, r.train_variant, r.eval_variant, r.surrogate, r.attack)
        grouped.setdefault(key, {}).setdefault(r.epsilon, []).append(r.accuracy)
    series = []
    for key, by_eps in sorted(grouped.items()):
        eps = tuple(sorted(by_eps))
        stats = [_mean_std(by_eps[e]) for e in eps]
        series.append(SweepSeries(*key, eps, tuple(m for m, _ in stats),
                                  tuple(s for _, s in stats)))
    return series


def series_to_csv(series: list[SweepSeries]) -> str:
    lines = ["dataset,train_variant,eval_variant,surrogate,attack,epsilon,mean,std"]
    for s in series:
        for e, m, sd in zip(s.epsilons, s.means, s.stds):
            lines.append(
                f"{s.dataset},{s.train_variant},{s.eval_variant},{s.surrogate},"
                f"{s.attack},{e!r},{m!r},{sd!r}"
            )
    return "\n".join(lines) + "\n"


def panels_to_csv(cells: list[PanelCell]) -> str:
    lines = ["panel,dataset,variant,mean,std,delta"]
    for c in cells:
        lines.append(f"{c.panel},{c.dataset},{c.variant},{c.mean!r},{c.std!r},{c.delta!r}")
    return "\n".join(lines) + "\n"


def correlation_export(x: SampledImage, ring_pairs) -> str:
    """CSV rows (r, r', dphi, value) for the requested ring pairs."""
    lines = ["r,r_prime,delta_phi,value"]
    for r, rp, dphi, value in correlation_rows(x, ring_pairs):
        lines.append(f"{r},{rp},{dphi},{value!r}")
    return "\n".join(lines) + "\n"
