"""Figures written next to CLI reports. Floats appear here only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "legend.fontsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def new_figure(width=5.0, height=3.5):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_ante_matrix(ante, instance, path, title="ante probabilities"):
    n, m = instance.n, instance.m
    fig, ax = new_figure(max(3.0, 0.35 * m + 1.5), max(2.5, 0.3 * n + 1.0))
    data = [[float(p) for p in row] for row in ante.probs]
    im = ax.imshow(data, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(m), instance.items, rotation=90)
    ax.set_yticks(range(n), instance.agents)
    ax.set_xlabel("item (arrival order)")
    ax.set_ylabel("agent")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046)
    return save(fig, path)


def plot_expected_utilities(expected, instance, path, title="expected utility"):
    fig, ax = new_figure()
    values = [float(v) for v in expected]
    ax.bar(range(len(values)), values, color="0.4")
    ax.axhline(min(values) if values else 0.0, color="C3", lw=1, ls="--", label="egalitarian welfare")
    ax.set_xticks(range(len(values)), instance.agents, rotation=90)
    ax.set_ylabel("expected utility")
    ax.set_title(title)
    ax.legend(frameon=False)
    return save(fig, path)


def plot_match_gaps(records, path, title="|EPTS - KDPI| per match"):
    fig, ax = new_figure()
    gaps = [float(r.gap) for r in records]
    colors = ["C0" if r.exact_blood else "C1" for r in records]
    ax.scatter(range(len(gaps)), gaps, c=colors, s=10)
    ax.set_xlabel("match (processing order)")
    ax.set_ylabel("gap")
    ax.set_title(title + "  (orange: cross-type)")
    return save(fig, path)


def plot_blood_mix(records, path, title="recipient vs organ blood type"):
    from .organs import BloodType

    order = list(BloodType)
    counts = [[0] * 4 for _ in order]
    for r in records:
        counts[order.index(r.patient.blood)][order.index(r.organ.blood)] += 1
    fig, ax = new_figure(3.6, 3.2)
    im = ax.imshow(counts, cmap="Blues")
    labels = [bt.value for bt in order]
    ax.set_xticks(range(4), labels)
    ax.set_yticks(range(4), labels)
    ax.set_xlabel("organ")
    ax.set_ylabel("recipient")
    for i in range(4):
        for j in range(4):
            ax.text(j, i, str(counts[i][j]), ha="center", va="center", fontsize=7)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046)
    return save(fig, path)
