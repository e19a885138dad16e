"""Matplotlib rendering of sweep curves, panel tables, and correlation plots.

Figures are written next to the delimited output by the CLI report path.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .report import PanelCell, SweepSeries
from .ringgrid import SampledImage
from .twirl import circular_correlations


def render_sweep_figure(series: list[SweepSeries], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in series:
        label = f"{s.train_variant}/{s.eval_variant} ({s.surrogate} {s.attack})"
        style = dict(ls="--", color="gray") if s.eval_variant == "whitebox" else {}
        eps = np.array(s.epsilons)
        means = np.array(s.means)
        stds = np.array(s.stds)
        ax.plot(eps, means, marker="o", ms=3, label=label, **style)
        ax.fill_between(eps, means - stds, means + stds, alpha=0.15)
    ax.set_xlabel(r"$\ell_\infty$ budget $\varepsilon$")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_panel_figure(cells: list[PanelCell], path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
    for ax, panel, title in zip(
        axes, ("a", "b"), ("train clean / test transformed", "train transformed / test clean")
    ):
        sub = [c for c in cells if c.panel == panel]
        names = [c.variant for c in sub]
        ax.bar(names, [c.mean for c in sub], yerr=[c.std for c in sub], capsize=3)
        ax.set_title(title, fontsize=9)
        ax.set_ylim(0, 1.05)
    axes[0].set_ylabel("accuracy")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_correlation_figure(x: SampledImage, ring_pairs, path) -> None:
    table = circular_correlations(x).values
    n_phi = x.grid.n_angles
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for r, rp in ring_pairs:
        ax.plot(range(n_phi), table[r, rp], marker="o", ms=3, label=f"C[{r},{rp}]")
    ax.set_xlabel(r"$\Delta\phi$")
    ax.set_ylabel("circular correlation")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
