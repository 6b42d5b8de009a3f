"""Rendering of estimator overlay figures to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "levy-lab"

import matplotlib.pyplot as plt  # noqa: E402

from .harness import FigureData


def render_overlay(data: FigureData, path) -> Path:
    """Plot replication curves, the truth, and one band; save to ``path``.

    The image format follows the file extension. Date metadata is
    suppressed so repeated runs produce identical files.
    """
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.5, 4.0))
    for row in data.curves:
        ax.plot(data.grid, row, color="#9ecae1", linewidth=0.6, alpha=0.6, zorder=1)
    ax.plot(data.grid, data.truth, color="black", linewidth=1.4, zorder=3, label="truth")
    ax.plot(
        data.grid, data.curves[0], color="#2166ac", linewidth=1.2, zorder=4,
        label=f"{data.method} estimate",
    )
    ax.plot(
        data.grid, data.lower, color="#2166ac", linewidth=1.0, linestyle="--",
        zorder=4, label=f"{data.level:g} band",
    )
    ax.plot(data.grid, data.upper, color="#2166ac", linewidth=1.0, linestyle="--", zorder=4)
    ax.set_xlabel("t")
    ax.set_ylabel("N(t)")
    ax.set_title(f"{data.model}, {data.method} estimator")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    metadata = {"Date": None} if path.suffix.lower() == ".svg" else {}
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)
    return path
