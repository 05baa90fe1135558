"""Matplotlib figures for the report path: matrix heatmaps and stage-layered
scenario graphs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import FancyArrowPatch

from .alert_model import CorrelationMatrix, ScenarioGraph, StageTaxonomy

# PNG metadata would otherwise embed the matplotlib version
_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _short(label: str, width: int = 22) -> str:
    return label if len(label) <= width else label[: width - 1] + "…"


def plot_matrix(matrix: CorrelationMatrix, path: str | os.PathLike, title: str | None = None) -> None:
    k = len(matrix.types)
    size = max(4.0, 0.7 * k + 2.5)
    fig, ax = plt.subplots(figsize=(size, size * 0.85))
    data = np.ma.masked_invalid(matrix.entries)
    cmap = plt.get_cmap("RdBu_r").copy()
    cmap.set_bad("0.85")
    im = ax.imshow(data, cmap=cmap, vmin=-1, vmax=1)
    labels = [_short(t) for t in matrix.types]
    ax.set_xticks(range(k), labels, rotation=60, ha="right", fontsize=8)
    ax.set_yticks(range(k), labels, fontsize=8)
    for i in range(k):
        for j in range(k):
            v = matrix.entries[i, j]
            text = "n/a" if np.isnan(v) else f"{v:.2f}"
            ax.text(j, i, text, ha="center", va="center", fontsize=7,
                    color="white" if not np.isnan(v) and abs(v) > 0.6 else "black")
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="Pearson r")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_scenario(graph: ScenarioGraph, path: str | os.PathLike,
                  taxonomy: StageTaxonomy | None = None) -> None:
    stages = sorted({n.stage for n in graph.nodes})
    column = {s: i for i, s in enumerate(stages)}
    pos = {}
    for s in stages:
        members = [n for n in graph.nodes if n.stage == s]
        for row, n in enumerate(members):
            pos[n.alert_type] = (column[s] * 3.0, -(row - (len(members) - 1) / 2) * 1.4)

    tallest = max((sum(1 for n in graph.nodes if n.stage == s) for s in stages), default=1)
    fig, ax = plt.subplots(figsize=(3.2 * max(len(stages), 1) + 1, 1.2 * tallest + 2))
    for e in graph.edges:
        (x0, y0), (x1, y1) = pos[e.source], pos[e.target]
        arrow = FancyArrowPatch((x0 + 0.9, y0), (x1 - 0.9, y1), arrowstyle="-|>", mutation_scale=12,
                                lw=0.5 + 2.5 * abs(e.r), color="tab:red" if e.r < 0 else "tab:blue",
                                connectionstyle="arc3,rad=0.05")
        ax.add_patch(arrow)
        ax.text((x0 + x1) / 2, (y0 + y1) / 2 + 0.12, f"{e.r:.4f}", fontsize=7, ha="center")
    for n in graph.nodes:
        x, y = pos[n.alert_type]
        ax.text(x, y, f"{_short(n.alert_type)}\n×{n.count}", ha="center", va="center", fontsize=8,
                bbox={"boxstyle": "round", "fc": "white", "ec": "0.3"})
        if n.alert_type in graph.self_loops:
            loop = FancyArrowPatch((x - 0.3, y + 0.3), (x + 0.3, y + 0.3), arrowstyle="-|>",
                                   mutation_scale=8, connectionstyle="arc3,rad=-1.6", color="0.4")
            ax.add_patch(loop)
    for s in stages:
        name = taxonomy.stage_name(s) if taxonomy else f"stage {s}"
        ax.text(column[s] * 3.0, 0.75 * tallest + 0.6, _short(name, 30), ha="center",
                fontsize=9, fontweight="bold")
    ax.set_xlim(-1.6, 3.0 * (len(stages) - 1) + 1.6)
    ax.set_ylim(-0.75 * tallest - 0.8, 0.75 * tallest + 1.0)
    ax.set_axis_off()
    ax.set_title(f"{graph.target_ip}  (theta={graph.theta}, {graph.edge_mode})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
