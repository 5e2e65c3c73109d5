"""Figure rendering for the command-line report paths.

Uses the Agg backend so figures render in headless environments;
every function writes a file and returns the path.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from emovox.emd import ImfDecomposition
from emovox.evaluation import ConfusionMatrix


def save_confusion_figure(cm: ConfusionMatrix, path) -> str:
    """Annotated heatmap of a confusion matrix."""
    n = len(cm.labels)
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * n, 1.0 + 0.8 * n))
    image = ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(range(n), cm.labels, rotation=45, ha="right")
    ax.set_yticks(range(n), cm.labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"accuracy { cm.accuracy:.3f}".replace("  ", " "))
    peak = cm.counts.max(initial=0)
    for i in range(n):
        for j in range(n):
            value = int(cm.counts[i, j])
            color = "white" if peak and value > peak / 2 else "black"
            ax.text(j, i, str(value), ha="center", va="center", color=color)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_decomposition_figure(samples: np.ndarray, decomp: ImfDecomposition,
                              sample_rate: float, path) -> str:
    """Stacked plot: input on top, then each mode, residual last."""
    rows = decomp.num_imfs + 2
    t = np.arange(len(samples)) / sample_rate
    fig, axes = plt.subplots(rows, 1, figsize=(10, 1.6 * rows),
                             sharex=True, squeeze=False)
    axes = axes[:, 0]
    axes[0].plot(t, samples, lw=0.7, color="black")
    axes[0].set_ylabel("input")
    for i, imf in enumerate(decomp.imfs):
        axes[i + 1].plot(t, imf, lw=0.7)
        axes[i + 1].set_ylabel(f"imf {i + 1}")
    axes[-1].plot(t, decomp.residual, lw=0.7, color="tab:red")
    axes[-1].set_ylabel("residual")
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
