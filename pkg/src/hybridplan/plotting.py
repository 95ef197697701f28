"""Figures for benchmark reports, rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchReport  # noqa: E402


def throughput_chart(reports: list[BenchReport], path: str | Path) -> Path:
    """Grouped bars of nodes/sec with the flag off and on, one group per domain."""
    path = Path(path)
    labels = [r.domain for r in reports]
    xs = range(len(reports))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(reports) + 2), 3.6))
    try:
        ax.bar([x - width / 2 for x in xs], [r.without for r in reports], width, label="tree off")
        ax.bar([x + width / 2 for x in xs], [r.with_ for r in reports], width, label="tree on")
        for x, r in zip(xs, reports):
            top = max(r.without, r.with_)
            ax.annotate(f"{r.percentage:+.0f}%", (x, top), ha="center", va="bottom", fontsize=8)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=20, ha="right")
        ax.set_ylabel("nodes expanded / s")
        ax.set_yscale("log")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
