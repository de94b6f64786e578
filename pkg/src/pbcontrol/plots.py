"""Figure rendering for the report commands.

Each helper takes a computed report object and writes one PNG next to
the delimited output.  Rendering is headless (Agg backend).
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .measures import RivalryMatrix, StrengthReport  # noqa: E402


def plot_deletion_size_distribution(report: StrengthReport, path) -> None:
    """Bar chart of how many deletions each project needs to win."""
    labels = ["funded"] + [str(r) for r in range(1, report.cap + 1)] + [f">{report.cap}"]
    counts = Counter()
    for p in report.projects:
        if p.funded:
            counts["funded"] += 1
        elif p.min_deletions is None:
            counts[f">{report.cap}"] += 1
        else:
            counts[str(p.min_deletions)] += 1
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, [counts.get(l, 0) for l in labels], color="#4878a8")
    ax.set_xlabel("deletions needed to be funded")
    ax.set_ylabel("projects")
    ax.set_title(f"{report.instance_name} / {report.rule.value}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_win_probabilities(report: StrengthReport, path) -> None:
    """Winning probability per losing project, one line per removal count."""
    losing = [p for p in report.projects if not p.funded and p.win_probability]
    if report.r_values:
        first_r = report.r_values[0]
        losing.sort(
            key=lambda p: p.win_probability.get(first_r).value
            if first_r in p.win_probability
            else 0,
            reverse=True,
        )
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(losing))
    for r in report.r_values:
        ys = [float(p.win_probability[r].value) if r in p.win_probability else 0.0 for p in losing]
        ax.plot(xs, ys, marker="o", markersize=3, label=f"r = {r}")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([p.project for p in losing], rotation=90, fontsize=6)
    ax.set_ylabel("probability of being funded")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.set_title(f"{report.instance_name} / {report.rule.value}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_rivalry_heatmap(matrix: RivalryMatrix, path, title: str = "") -> None:
    """Heatmap of rivalry values: red near 0, blue near 1."""
    grid = [
        [
            float(matrix.entries[(p, q)]) if (p, q) in matrix.entries else float("nan")
            for p in matrix.rows
        ]
        for q in matrix.cols
    ]
    fig, ax = plt.subplots(figsize=(max(4, 0.4 * len(matrix.rows)), max(4, 0.3 * len(matrix.cols))))
    im = ax.imshow(grid, cmap="RdBu", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(matrix.rows)))
    ax.set_xticklabels(matrix.rows, rotation=90, fontsize=6)
    ax.set_yticks(range(len(matrix.cols)))
    ax.set_yticklabels(matrix.cols, fontsize=6)
    ax.set_xlabel("losing project")
    ax.set_ylabel("removed rival")
    fig.colorbar(im, ax=ax, label=f"win probability (r = {matrix.r})")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_correlation_heatmap(
    labels: Sequence[str], values, path, title: str = ""
) -> None:
    """Heatmap of a measure-by-measure correlation matrix."""
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(labels), 1.0 + 0.8 * len(labels)))
    im = ax.imshow(values, cmap="viridis", vmin=-1.0, vmax=1.0)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels)
    for i in range(len(labels)):
        for j in range(len(labels)):
            v = values[i][j]
            if v == v:  # skip NaN cells
                ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=7,
                        color="white" if v < 0.5 else "black")
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
