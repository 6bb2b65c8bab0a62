"""Figure rendering for training reports and rank distributions.

Uses the object-oriented matplotlib API with an explicit Agg canvas, so no
global backend or pyplot state is touched; figures go straight to files next
to the line-oriented reports.
"""

from __future__ import annotations

import os

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _save(fig: Figure, path: str | os.PathLike) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=150)


def save_training_curves(report, path: str | os.PathLike) -> None:
    """Render per-epoch mean loss and validation mean rank to one image.

    ``report`` is a training.TrainReport; the selected best epoch is marked
    on the validation curve.
    """
    fig = Figure(figsize=(9.0, 3.6))
    loss_ax, rank_ax = fig.subplots(1, 2)

    epochs = np.arange(1, len(report.epoch_losses) + 1)
    loss_ax.plot(epochs, report.epoch_losses, color="tab:blue", lw=1.2)
    loss_ax.set_xlabel("epoch")
    loss_ax.set_ylabel("mean hinge loss")
    loss_ax.set_title("training loss")

    if report.evaluations:
        eval_epochs = [epoch for epoch, _ in report.evaluations]
        mean_ranks = [rank for _, rank in report.evaluations]
        rank_ax.plot(eval_epochs, mean_ranks, marker="o", ms=3, color="tab:orange", lw=1.2)
        rank_ax.axvline(report.best_epoch, color="tab:green", ls=":", lw=1.0)
        rank_ax.annotate(
            f"best @ {report.best_epoch}",
            xy=(report.best_epoch, report.best_valid_mean_rank),
            xytext=(4, 4),
            textcoords="offset points",
            fontsize=8,
            color="tab:green",
        )
    rank_ax.set_xlabel("epoch")
    rank_ax.set_ylabel("validation mean rank")
    rank_ax.set_title("model selection")

    fig.tight_layout()
    _save(fig, path)


def save_rank_histogram(
    head_ranks: np.ndarray, tail_ranks: np.ndarray, path: str | os.PathLike
) -> None:
    """Render log-binned histograms of head-side and tail-side ranks."""
    head_ranks = np.asarray(head_ranks)
    tail_ranks = np.asarray(tail_ranks)
    top = max(int(head_ranks.max()), int(tail_ranks.max()), 10)
    bins = np.logspace(0.0, np.log10(top + 1.0), num=40)

    fig = Figure(figsize=(6.0, 3.6))
    ax = fig.subplots()
    ax.hist(head_ranks, bins=bins, histtype="step", lw=1.4, label="head side")
    ax.hist(tail_ranks, bins=bins, histtype="step", lw=1.4, label="tail side")
    ax.axvline(10, color="gray", ls=":", lw=1.0, label="hits@10 cutoff")
    ax.set_xscale("log")
    ax.set_xlabel("rank of the correct entity")
    ax.set_ylabel("triples")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
