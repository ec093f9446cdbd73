"""Static figures and delimited output for attribution results.

Rendered to files next to the JSON report: a token heatmap and a signed
coefficient chart as PNGs, plus a CSV with one row per token.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import AttributionResult

plt.rcParams.update({
    "figure.dpi": 120,
    "font.size": 9,
    "axes.titlesize": 10,
})


def heatmap_figure(result: AttributionResult):
    """Single-row heatmap of normalized scores, one cell per token."""
    scores = np.asarray(result.normalized_scores, dtype=float)
    m = len(scores)
    fig, ax = plt.subplots(figsize=(max(3.0, 0.7 * m), 1.6))
    image = ax.imshow(scores[None, :], cmap="Reds", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(m))
    ax.set_xticklabels(result.tokens, rotation=45, ha="right")
    ax.set_yticks([])
    ax.set_title("token attribution")
    fig.colorbar(image, ax=ax, fraction=0.05, pad=0.02)
    fig.tight_layout()
    return fig, ax


def coefficient_figure(result: AttributionResult):
    """Horizontal bar chart of the signed surrogate coefficients."""
    coefs = np.asarray(result.coefficients, dtype=float)
    order = np.arange(len(coefs))[::-1]
    fig, ax = plt.subplots(figsize=(4.0, max(1.8, 0.35 * len(coefs))))
    colors = ["#b2182b" if c >= 0 else "#2166ac" for c in coefs[order]]
    ax.barh(range(len(coefs)), coefs[order], color=colors)
    ax.set_yticks(range(len(coefs)))
    ax.set_yticklabels([result.tokens[i] for i in order])
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("coefficient")
    fig.tight_layout()
    return fig, ax


def write_scores_csv(result: AttributionResult, path: str | Path) -> Path:
    """One row per token: token, signed coefficient, normalized score."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["token", "coefficient", "normalized_score"])
        for token, coef, score in zip(
            result.tokens, result.coefficients, result.normalized_scores
        ):
            writer.writerow([token, repr(float(coef)), repr(float(score))])
    return path


def save_report_figures(result: AttributionResult, report_path: str | Path) -> list[Path]:
    """Write the PNG figures alongside a report file; returns their paths."""
    report_path = Path(report_path)
    targets = []
    for name, maker in (("heatmap", heatmap_figure), ("coefficients", coefficient_figure)):
        fig, _ = maker(result)
        target = report_path.with_name(f"{report_path.stem}_{name}.png")
        fig.savefig(target)
        plt.close(fig)
        targets.append(target)
    return targets
