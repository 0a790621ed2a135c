"""Figure rendering for the report commands.

Each CSV-producing command can drop a companion PNG next to its delimited
output.  Rendering is pinned to the Agg backend and fixed rc settings so the
bytes of a figure, like the bytes of a CSV, depend only on config and seed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .blockworld import SHAPES
from .evaluation import BagCurvePoint, GuessingReport, chance_baseline

_RC = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 0.9,
}

_SERIES_COLORS = {"bayes": "#1f77b4", "cf": "#d62728", "ds": "#2ca02c"}
_PNG_METADATA = {"Software": "beliefbench"}


def _save(fig, path) -> None:
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def save_guessing_figure(
    reports: dict[str, GuessingReport],
    optimal: GuessingReport,
    path,
    title: str = "Guessing cost by shape",
) -> None:
    """Grouped bars of per-shape mean guesses, one group per shape.

    ``reports`` maps a series label (calculus or similar) to its report; the
    optimal cost is drawn as a marker on each group.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        labels = list(reports)
        n = max(len(labels), 1)
        width = 0.8 / n
        x = np.arange(len(SHAPES))
        for i, label in enumerate(labels):
            offsets = x - 0.4 + (i + 0.5) * width
            series = reports[label]
            color = _SERIES_COLORS.get(label.split("(")[0])
            ax.bar(offsets, series.mean, width=width * 0.9, label=label, color=color)
        ax.plot(x, optimal.mean, "k_", markersize=18, label="optimal")
        ax.axhline(chance_baseline(), color="gray", linestyle=":", label="chance")
        ax.set_xticks(x, [s.label for s in SHAPES])
        ax.set_ylabel("mean guesses until correct")
        ax.set_ylim(0, 3.1)
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def save_curve_figure(
    curves: dict[str, list[BagCurvePoint]],
    path,
    title: str = "Bag diagnosis cost by sample size",
) -> None:
    """Mean guesses against bag size, one line per series, log-scaled sizes.

    Error bars show the standard error of each mean.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, points in curves.items():
            sizes = [p.sample_size for p in points]
            means = [p.mean_guesses for p in points]
            errs = [
                p.std_guesses / np.sqrt(p.replications) if p.replications else 0.0
                for p in points
            ]
            color = _SERIES_COLORS.get(label.split("/")[0])
            ax.errorbar(sizes, means, yerr=errs, marker="o", markersize=4,
                        capsize=3, label=label, color=color)
        ax.axhline(chance_baseline(), color="gray", linestyle=":", label="chance")
        ax.set_xscale("log")
        all_sizes = sorted({p.sample_size for pts in curves.values() for p in pts})
        ax.set_xticks(all_sizes, [str(s) for s in all_sizes])
        ax.minorticks_off()
        ax.set_xlabel("blocks per bag")
        ax.set_ylabel("mean guesses until correct")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)
