"""Figure rendering for reports: solved-puzzle images, Top-i curves,
local-fitness heatmaps, and GA fitness traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import Arrangement, PuzzleBundle
from .dataset import render_arrangement, save_image


def save_solution_image(a: Arrangement, bundle: PuzzleBundle, path) -> None:
    save_image(render_arrangement(a, bundle), path)


def save_topi_figure(curves: dict, path) -> None:
    """curves: label -> list of Top-i values (index 0 is Top-1)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        xs = np.arange(1, len(values) + 1)
        ax.plot(xs, values, marker="o", markersize=3, label=label)
    ax.set_xlabel("i")
    ax.set_ylabel("Top-i accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_heatmap_figure(grid: np.ndarray, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    im = ax.imshow(grid, cmap="viridis", interpolation="nearest")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(traces, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, trace in enumerate(traces):
        ax.plot(np.arange(1, len(trace) + 1), trace, label=f"restart {i}")
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness")
    ax.grid(True, alpha=0.3)
    if len(traces) <= 10:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
