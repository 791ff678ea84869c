"""Figures written next to the tab-separated reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import BatchReport  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "figure.dpi": 150,
}


def _figure(width=4.5, height=3.0):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_weight_sweep(points, path, label: str = "") -> Path:
    """Score against junction weight w."""
    fig, ax = _figure()
    ws = [float(w) for w, _ in points]
    scores = [float(s) for _, s in points]
    ax.plot(ws, scores, marker="o", color="#1f5f8b", lw=1.2)
    ax.set_xlabel("junction weight w")
    ax.set_ylabel("alignment score")
    if label:
        ax.set_title(label, fontsize=9)
    return _save(fig, path)


def plot_batch(report: BatchReport, path) -> Path:
    """Per-group score distributions with mean precision in the tick labels."""
    groups = list(report.averages)
    fig, ax = _figure(width=max(3.5, 1.2 * len(groups) + 1.5))
    data = [[float(r.score) for r in report.rows if r.group == g] for g in groups]
    if data:
        ax.boxplot(data, showfliers=True)
        ticks = []
        for g in groups:
            pr = report.averages[g][1]
            ticks.append(f"{g}\nPR={'N/A' if pr is None else f'{float(pr):.2f}'}")
        ax.set_xticks(range(1, len(groups) + 1), ticks)
    ax.set_ylabel("alignment score")
    return _save(fig, path)
