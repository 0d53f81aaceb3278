"""CSV tables and matplotlib figures rendered next to JSON reports.

Every figure goes to a file (Agg backend, no display).  Rows are the
per-model dicts produced by evaluation.report_to_dict.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRIC_COLUMNS = [
    "model",
    "dataset",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "avg_query_seconds",
    "throughput_qps",
    "harmonic_mean",
    "n_queries",
]

_QUALITY = ["accuracy", "precision", "recall", "f1"]


def write_metrics_csv(rows: list[dict], path) -> None:
    """One CSV line per model with the standard metric columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def plot_metric_bars(rows: list[dict], path) -> None:
    """Grouped bars of accuracy/precision/recall/F1 per model."""
    models = [row["model"] for row in rows]
    x = range(len(models))
    width = 0.8 / len(_QUALITY)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(models)), 4.0))
    for j, metric in enumerate(_QUALITY):
        offs = [i + (j - (len(_QUALITY) - 1) / 2) * width for i in x]
        ax.bar(offs, [row[metric] for row in rows], width=width, label=metric)
    ax.set_xticks(list(x))
    ax.set_xticklabels(models, rotation=15, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Retrieval quality")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_throughput_bars(rows: list[dict], path) -> None:
    """Throughput and harmonic-mean bars per model."""
    models = [row["model"] for row in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(max(8.0, 2.4 * len(models)), 4.0))
    ax1.bar(models, [row["throughput_qps"] for row in rows], color="tab:blue")
    ax1.set_ylabel("queries / s")
    ax1.set_title("Throughput")
    ax2.bar(models, [row["harmonic_mean"] for row in rows], color="tab:orange")
    ax2.set_ylabel("harmonic mean (F1, throughput)")
    ax2.set_title("Quality-speed balance")
    for ax in (ax1, ax2):
        ax.tick_params(axis="x", rotation=15)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_loss_csv(epoch_losses: list[float], path) -> None:
    """Per-epoch mean training loss as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(epoch_losses, 1):
            writer.writerow([epoch, loss])


def plot_loss_curve(epoch_losses: list[float], path) -> None:
    """Training-loss trajectory over epochs."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(range(1, len(epoch_losses) + 1), epoch_losses, marker="o")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean batch loss")
    ax.set_title("Training loss")
    ax.set_xticks(range(1, len(epoch_losses) + 1))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_eval_outputs(rows: list[dict], out_dir, figures: bool = True) -> list[str]:
    """Write metrics.csv (and figures) under out_dir; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = out / "metrics.csv"
    write_metrics_csv(rows, csv_path)
    written.append(str(csv_path))
    if figures:
        bars = out / "metrics.png"
        plot_metric_bars(rows, bars)
        written.append(str(bars))
        speed = out / "throughput.png"
        plot_throughput_bars(rows, speed)
        written.append(str(speed))
    return written


def render_train_outputs(epoch_losses: list[float], out_dir, figures: bool = True) -> list[str]:
    """Write train_loss.csv (and the loss curve) under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = out / "train_loss.csv"
    write_loss_csv(epoch_losses, csv_path)
    written.append(str(csv_path))
    if figures:
        fig_path = out / "train_loss.png"
        plot_loss_curve(epoch_losses, fig_path)
        written.append(str(fig_path))
    return written
