"""Matplotlib figures written next to the delimited reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EvaluationReport  # noqa: E402
from .model import sort_labels  # noqa: E402

_COLORS = ("#4C72B0", "#DD8452", "#55A868", "#C44E52")
# drop the timestamp/version chunks so repeated runs give identical files
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_report(report: EvaluationReport, path: Path, title: str | None = None) -> Path:
    """Grouped bars of per-label precision, recall and F1, with support on top."""
    labels = report.labels()
    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(labels) + 2), 4.0))
    width = 0.26
    xs = range(len(labels))
    for k, (name, attr) in enumerate((("precision", "precision"), ("recall", "recall"), ("F1", "f1"))):
        vals = [getattr(report.per_label[l], attr) for l in labels]
        ax.bar([x + (k - 1) * width for x in xs], vals, width, label=name, color=_COLORS[k])
    for x, l in zip(xs, labels):
        ax.text(x, 1.02, str(report.per_label[l].support), ha="center", va="bottom", fontsize=7)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.12)
    ax.set_ylabel("score")
    ax.set_title(title or f"{report.mode.value} evaluation (macro F1 {report.macro.f1:.3f})")
    ax.legend(loc="lower right", fontsize=8, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_mode_comparison(reports: Mapping[str, EvaluationReport], path: Path, metric: str = "f1") -> Path:
    """Per-label scores side by side for several matching modes."""
    modes = list(reports)
    labels = sort_labels(l for r in reports.values() for l in r.per_label)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(labels) + 2), 4.0))
    width = 0.8 / max(1, len(modes))
    for k, mode in enumerate(modes):
        rows = reports[mode].per_label
        vals = [getattr(rows[l], metric) if l in rows else 0.0 for l in labels]
        offset = (k - (len(modes) - 1) / 2) * width
        ax.bar([x + offset for x in range(len(labels))], vals, width, label=mode, color=_COLORS[k % len(_COLORS)])
    ax.set_xticks(list(range(len(labels))))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel(metric)
    ax.set_title(f"{metric} by matching mode")
    ax.legend(fontsize=8, frameon=False, ncol=len(modes))
    fig.tight_layout()
    return _save(fig, path)


def plot_label_distribution(counts: Mapping[str, int], path: Path, title: str = "gold spans per label") -> Path:
    labels = sort_labels(counts)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.7 * len(labels) + 2), 3.6))
    vals = [counts[l] for l in labels]
    ax.bar(labels, vals, color=_COLORS[0])
    for x, v in enumerate(vals):
        ax.text(x, v, str(v), ha="center", va="bottom", fontsize=7)
    ax.set_ylabel("count")
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    return _save(fig, path)


def plot_chunk_sizes(sizes: Sequence[int], path: Path, max_tokens: int) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.hist(sizes, bins=min(30, max(5, len(set(sizes)))), color=_COLORS[2])
    ax.axvline(max_tokens, color="k", lw=0.8, ls="--")
    ax.set_xlabel("tokens per chunk")
    ax.set_ylabel("chunks")
    fig.tight_layout()
    return _save(fig, path)
