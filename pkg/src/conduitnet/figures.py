"""Figure rendering for the report subcommands.

Renders the histogram bins and cartogram data reductions to PNG files
next to their CSVs.  Uses the Agg backend so no display is needed;
figures are a convenience view, the CSVs remain the canonical output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def render_histogram(bins, out_path, title: str = "Score distribution",
                     xlabel: str = "score") -> None:
    """Bar chart of compute_histogram output."""
    fig, ax = plt.subplots(figsize=(8, 5))
    if bins:
        lows = [b[0] for b in bins]
        counts = [b[2] for b in bins]
        width = bins[0][1] - bins[0][0]
        ax.bar(lows, counts, width=width, align="edge", edgecolor="black", linewidth=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_cartogram(rows, out_path, sector: str) -> None:
    """Horizontal bar chart of per-jurisdiction multilayer scores,
    largest first; stands in for a true boundary-warping cartogram."""
    ordered = sorted(rows, key=lambda r: r[1])
    fig, ax = plt.subplots(figsize=(8, max(3, 0.35 * len(ordered) + 1.5)))
    if ordered:
        names = [r[0] for r in ordered]
        vals = [r[1] for r in ordered]
        ax.barh(names, vals, edgecolor="black", linewidth=0.5)
    ax.set_xlabel("multilayer centrality M")
    ax.set_title(f"Sector {sector}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
