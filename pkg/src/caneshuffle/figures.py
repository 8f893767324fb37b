"""Matplotlib renderings of evaluation and benchmark reports.

Every report-producing CLI path writes these figures next to its CSV/JSON
output. All functions take an output path and return it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_confusion_matrix(cm: np.ndarray, class_names, path):
    fig, ax = plt.subplots(figsize=(9, 8))
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(class_names)), class_names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(class_names)), class_names, fontsize=7)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    ax.set_title("Confusion matrix")
    fig.colorbar(im, ax=ax, shrink=0.8)
    thresh = cm.max() / 2 if cm.max() else 0
    for i in range(cm.shape[0]):
        for j in range(cm.shape[1]):
            if cm[i, j]:
                ax.text(j, i, str(cm[i, j]), ha="center", va="center", fontsize=6,
                        color="white" if cm[i, j] > thresh else "black")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_roc_curves(curves: dict[str, list[tuple[float, float]]],
                    aucs: dict[str, float], path):
    fig, ax = plt.subplots(figsize=(7, 6))
    for name, pts in curves.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, lw=1, label=f"{name} (AUC={aucs.get(name, float('nan')):.3f})")
    ax.plot([0, 1], [0, 1], "k--", lw=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("One-vs-rest ROC curves")
    ax.legend(fontsize=6, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_pr_curves(curves: dict[str, list[tuple[float, float]]],
                   aps: dict[str, float], path):
    fig, ax = plt.subplots(figsize=(7, 6))
    for name, pts in curves.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, lw=1, label=f"{name} (AP={aps.get(name, float('nan')):.3f})")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_title("One-vs-rest precision-recall curves")
    ax.legend(fontsize=6, loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ci_bars(class_names, accuracies, ci_lows, ci_highs, path):
    fig, ax = plt.subplots(figsize=(10, 5))
    x = np.arange(len(class_names))
    acc = np.asarray(accuracies)
    err = np.vstack([acc - np.asarray(ci_lows), np.asarray(ci_highs) - acc])
    ax.bar(x, acc, yerr=np.clip(err, 0, None), capsize=3, color="#4c72b0")
    ax.set_xticks(x, class_names, rotation=90, fontsize=7)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Per-class recall")
    ax.set_title("Class accuracy with 95% confidence intervals")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_latency_hist(samples_ms, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(samples_ms, bins=20, color="#55a868", edgecolor="black")
    ax.axvline(float(np.median(samples_ms)), color="red", ls="--", label="median")
    ax.axvline(float(np.percentile(samples_ms, 95)), color="orange", ls="--", label="p95")
    ax.set_xlabel("Latency per image (ms)")
    ax.set_ylabel("Count")
    ax.set_title("Single-image inference latency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_plan_chart(plan, path):
    rows = plan.rows
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(10, 5))
    ax.bar(x - 0.2, [r.train for r in rows], width=0.4, label="train (pre-augment)")
    ax.bar(x + 0.2, [r.final for r in rows], width=0.4, label="final (post-augment)")
    ax.set_xticks(x, [r.label for r in rows], rotation=90, fontsize=7)
    ax.set_ylabel("Images")
    ax.set_title(
        f"Augmentation plan (imbalance {plan.original_ratio:.1f}:1 -> {plan.final_ratio:.2f}:1)"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
