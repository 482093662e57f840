"""Render evaluation reports as figures next to the JSON/text output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import CATEGORY_LABELS, Category, SystemReport

_BAR_COLORS = ("#2f6f8f", "#8f5a2f", "#5a8f2f", "#8f2f5a")


def _color(i: int) -> str:
    return _BAR_COLORS[i % len(_BAR_COLORS)]


def plot_accuracy_by_category(reports: list[SystemReport], path: Path) -> None:
    categories = list(Category)
    x = np.arange(len(categories))
    width = 0.8 / max(len(reports), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, report in enumerate(reports):
        values = [report.per_category[c].accuracy or 0.0 for c in categories]
        ax.bar(x + i * width, values, width, label=report.system, color=_color(i))
    ax.set_xticks(x + width * (len(reports) - 1) / 2)
    ax.set_xticklabels([CATEGORY_LABELS[c] for c in categories])
    ax.set_ylabel("Accuracy")
    ax.set_ylim(0, 1.05)
    ax.set_title("Accuracy by question category")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_overall_summary(reports: list[SystemReport], path: Path) -> None:
    systems = [r.system for r in reports]
    scores = [r.average_score or 0.0 for r in reports]
    times = [r.avg_response_time_s or 0.0 for r in reports]
    fig, (ax_score, ax_time) = plt.subplots(1, 2, figsize=(9, 4))
    bars = np.arange(len(systems))
    ax_score.bar(bars, scores, color=[_color(i) for i in range(len(systems))])
    ax_score.set_xticks(bars)
    ax_score.set_xticklabels(systems, rotation=20, ha="right", fontsize=8)
    ax_score.set_ylabel("Average score")
    ax_score.set_ylim(0, 1.05)
    ax_score.set_title("Overall average score")
    ax_time.bar(bars, times, color=[_color(i) for i in range(len(systems))])
    ax_time.set_xticks(bars)
    ax_time.set_xticklabels(systems, rotation=20, ha="right", fontsize=8)
    ax_time.set_ylabel("Avg. response time (s)")
    ax_time.set_title("Overall response time")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_qualitative_complex(reports: list[SystemReport], path: Path) -> None:
    rated = [r for r in reports if r.qualitative is not None]
    fig, ax = plt.subplots(figsize=(7, 4))
    systems = [r.system for r in rated]
    bars = np.arange(len(systems))
    excellent = np.array([r.qualitative.excellent_pct for r in rated]) if rated else np.array([])
    satisfactory = np.array([r.qualitative.satisfactory_pct for r in rated]) if rated else np.array([])
    poor = np.array([r.qualitative.poor_pct for r in rated]) if rated else np.array([])
    if rated:
        ax.bar(bars, excellent, label="Excellent", color="#2f6f8f")
        ax.bar(bars, satisfactory, bottom=excellent, label="Satisfactory", color="#d9a441")
        ax.bar(bars, poor, bottom=excellent + satisfactory, label="Poor", color="#b04a4a")
    ax.set_xticks(bars)
    ax.set_xticklabels(systems, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("Share of complex answers (%)")
    ax.set_title("Qualitative breakdown on complex questions")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report_figures(reports: list[SystemReport], out_dir: str | Path) -> list[Path]:
    """Write the three report figures into out_dir and return their paths."""
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [
        directory / "accuracy_by_category.png",
        directory / "overall_summary.png",
        directory / "qualitative_complex.png",
    ]
    plot_accuracy_by_category(reports, paths[0])
    plot_overall_summary(reports, paths[1])
    plot_qualitative_complex(reports, paths[2])
    return paths
