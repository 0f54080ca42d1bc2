"""Figure rendering for report and sweep tables.

Every CLI report path can drop a PNG next to the delimited output; these
helpers consume the same row dicts the CSV writers consume.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import METRIC_NAMES, MetricsReport

__all__ = [
    "plot_report",
    "plot_q_sweep",
    "plot_nof_sweep",
    "plot_train_size_sweep",
    "plot_degradation_sweep",
    "plot_legacy_comparison",
]

_PLOT_METRICS = ("precision", "recall", "f1", "g_mean")


def _aggregate_rows(rows: Sequence[Mapping]) -> list[Mapping]:
    return [r for r in rows if r.get("scope", "aggregate") == "aggregate"]


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_report(reports: Sequence[MetricsReport], path) -> None:
    """Aggregate metrics vs q for one model."""
    rows = [row for report in reports for row in report.rows()]
    plot_q_sweep(rows, path)


def plot_q_sweep(rows: Sequence[Mapping], path) -> None:
    """Metric-vs-q curves, one line per model, one panel per metric."""
    rows = _aggregate_rows(rows)
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharex=True)
    for ax, metric in zip(axes.ravel(), _PLOT_METRICS):
        series = defaultdict(list)
        for row in rows:
            if row["metric"] == metric:
                series[row["model"]].append((float(row["q"]), float(row["mean"]), float(row["std"])))
        for model in sorted(series):
            pts = sorted(series[model])
            q = [p[0] for p in pts]
            mean = [p[1] for p in pts]
            std = [p[2] for p in pts]
            ax.errorbar(q, mean, yerr=std, marker="o", capsize=3, label=model)
        ax.set_title(metric)
        ax.set_xlabel("Q (non-target / target ratio)")
        ax.set_ylim(0.0, 1.05)
        ax.grid(alpha=0.3)
    axes.ravel()[0].legend(fontsize=8)
    _save(fig, path)


def plot_nof_sweep(rows: Sequence[Mapping], path) -> None:
    """F1 vs number of selected features, one line per q."""
    rows = _aggregate_rows(rows)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    series = defaultdict(list)
    for row in rows:
        if row["metric"] == "f1":
            nof = row.get("requested_nof", row["nof"])
            series[float(row["q"])].append((int(nof), float(row["mean"])))
    for q in sorted(series):
        pts = sorted(series[q])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"Q={q:g}")
    ax.set_xlabel("number of features")
    ax.set_ylabel("F1")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_train_size_sweep(rows: Sequence[Mapping], path) -> None:
    rows = _aggregate_rows(rows)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    series = defaultdict(list)
    for row in rows:
        if row["metric"] == "f1":
            series[float(row["q"])].append((int(row["train_size"]), float(row["mean"])))
    for q in sorted(series):
        pts = sorted(series[q])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"Q={q:g}")
    ax.set_xlabel("training vectors per EV")
    ax.set_ylabel("F1")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_degradation_sweep(rows: Sequence[Mapping], path) -> None:
    """F1 per chronological test window; dashed lines mark the per-q means."""
    rows = _aggregate_rows(rows)
    fracs = sorted({float(r["train_fraction"]) for r in rows})
    fig, axes = plt.subplots(1, max(len(fracs), 1), figsize=(5.5 * max(len(fracs), 1), 4.5), squeeze=False)
    for ax, frac in zip(axes[0], fracs):
        series = defaultdict(list)
        means = {}
        for row in rows:
            if float(row["train_fraction"]) != frac or row["metric"] != "f1":
                continue
            if row["window_index"] == "mean":
                means[float(row["q"])] = float(row["mean"])
            else:
                series[float(row["q"])].append((int(row["window_index"]), float(row["mean"])))
        for q in sorted(series):
            pts = sorted(series[q])
            line = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"Q={q:g}")
            if q in means:
                ax.axhline(means[q], linestyle="--", alpha=0.6, color=line[0].get_color())
        ax.set_title(f"train fraction {frac:g}")
        ax.set_xlabel("test window index")
        ax.set_ylabel("F1")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_legacy_comparison(rows: Sequence[Mapping], path) -> None:
    rows = _aggregate_rows(rows)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    series = defaultdict(list)
    for row in rows:
        if row["metric"] == "f1":
            series[row["arm"]].append((float(row["q"]), float(row["mean"]), float(row["std"])))
    for arm in sorted(series):
        pts = sorted(series[arm])
        ax.errorbar(
            [p[0] for p in pts],
            [p[1] for p in pts],
            yerr=[p[2] for p in pts],
            marker="o",
            capsize=3,
            label=arm,
        )
    ax.set_xlabel("Q (non-target / target ratio)")
    ax.set_ylabel("F1")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)
