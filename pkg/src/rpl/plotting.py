"""Figure rendering for the CLI report paths.

Every figure goes straight to a file through the Agg backend (no display
required) with fixed metadata, so reruns produce identical bytes. These
are companion views of the delimited outputs, not replacements for them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# strip the version-bearing Software chunk so PNG bytes depend only on content
_PNG_METADATA = {"Software": "rpl"}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def save_loss_curve(path, epoch_losses):
    """Per-epoch training loss on a log scale."""
    losses = np.asarray(epoch_losses, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(np.arange(1, losses.size + 1), losses, lw=1.5)
    if losses.size and np.all(losses > 0):
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_projection_figure(path, coords, latent=None, title="projection"):
    """Scatter of projected points, colored by the latent parameter if given.

    Three or more columns give a 3-D scatter of the first three; two give
    a plane; one is plotted against the row index.
    """
    m = np.asarray(coords, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("coords must be a non-empty 2-D array")
    color = None if latent is None else np.asarray(latent, dtype=float)
    fig = plt.figure(figsize=(6.0, 5.0))
    if m.shape[1] >= 3:
        ax = fig.add_subplot(projection="3d")
        sc = ax.scatter(m[:, 0], m[:, 1], m[:, 2], c=color, cmap="viridis", s=6)
    elif m.shape[1] == 2:
        ax = fig.add_subplot()
        sc = ax.scatter(m[:, 0], m[:, 1], c=color, cmap="viridis", s=6)
    else:
        ax = fig.add_subplot()
        sc = ax.scatter(np.arange(m.shape[0]), m[:, 0], c=color, cmap="viridis", s=6)
    if color is not None:
        fig.colorbar(sc, ax=ax, shrink=0.7, label="latent")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def save_spectrum_figure(path, eigs_high, eigs_low, n_show=32):
    """Leading eigenvalues of both relationship matrices, side by side."""
    hi = np.asarray(eigs_high, dtype=float)[:n_show]
    lo = np.asarray(eigs_low, dtype=float)[:n_show]
    idx = np.arange(1, hi.size + 1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    width = 0.4
    ax.bar(idx - width / 2, hi, width=width, label="original")
    ax.bar(idx + width / 2, lo, width=width, label="projected")
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("relationship spectra")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_recall_figure(path, reports):
    """Grouped Recall@K bars for each retrieval direction."""
    directions = list(reports)
    ks = sorted(reports[directions[0]].recall_at)
    idx = np.arange(len(ks))
    width = 0.8 / max(len(directions), 1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for pos, direction in enumerate(directions):
        values = [reports[direction].recall_at[k] for k in ks]
        ax.bar(idx + pos * width, values, width=width, label=direction)
    ax.set_xticks(idx + width * (len(directions) - 1) / 2)
    ax.set_xticklabels([f"R@{k}" for k in ks])
    ax.set_ylim(0.0, 1.05)
    ax.set_title("retrieval recall")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
