"""Figure rendering for experiment reports.

Every report path writes matplotlib figures next to the delimited output:
training curves per fold, a per-fold accuracy chart for cross-validation
and line charts for the depth / receptive-field sweeps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_training_curves(history, path, title="training"):
    epochs = np.arange(1, len(history.loss) + 1)
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(epochs, history.loss, color="tab:blue", label="loss")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(epochs, history.train_acc, color="tab:orange", label="train acc")
    ax2.set_ylabel("train accuracy", color="tab:orange")
    ax2.set_ylim(0, 1.02)
    ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_fold_accuracies(accuracies, path, title="cross-validation"):
    accuracies = np.asarray(accuracies, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    folds = np.arange(len(accuracies))
    ax.bar(folds, 100 * accuracies, color="tab:blue", alpha=0.8)
    mean = 100 * accuracies.mean()
    ax.axhline(mean, color="tab:red", linestyle="--",
               label=f"mean {mean:.2f}%")
    ax.set_xlabel("fold")
    ax.set_ylabel("test accuracy (%)")
    ax.set_xticks(folds)
    ax.set_ylim(0, 105)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(xs, means, stds, path, xlabel, title):
    xs = np.asarray(xs, dtype=float)
    means = 100 * np.asarray(means, dtype=float)
    stds = 100 * np.asarray(stds, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=4, color="tab:blue")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("accuracy (%)")
    ax.set_xticks(xs)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
