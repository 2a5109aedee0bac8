"""Figure rendering for experiment reports.

All renderers return self-contained SVG text. Output is byte-identical
for identical input: the SVG hash salt is pinned and the creation date
is stripped from the metadata.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_heatmap", "render_line_plot"]

matplotlib.rcParams["svg.hashsalt"] = "gmatch"


def _to_svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return buf.getvalue()


def render_line_plot(series, xlabel: str, ylabel: str, title: str | None = None, ylim=None) -> str:
    """Render labeled (x, y) series as an SVG line plot.

    ``series`` is a sequence of ``(label, xs, ys)`` triples; labels go to
    the legend. Raises on empty input.
    """
    series = list(series)
    if not series or all(len(xs) == 0 for _, xs, _ in series):
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, xs, ys in series:
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.2, label=str(label))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if ylim is not None:
        ax.set_ylim(*ylim)
    ax.grid(True, alpha=0.3)
    if 1 < len(series) <= 12:
        ax.legend(fontsize=8)
    return _to_svg(fig)


def render_heatmap(values, x_ticks, y_ticks, xlabel: str, ylabel: str, title: str | None = None, vmin: float = 0.0, vmax: float = 1.0) -> str:
    """Render a value grid as an SVG heatmap with a colorbar.

    ``values[i][j]`` is drawn at row ``y_ticks[i]``, column ``x_ticks[j]``;
    the y-axis increases upward. Raises on empty input.
    """
    import numpy as np

    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("nothing to plot")
    if values.shape != (len(y_ticks), len(x_ticks)):
        raise ValueError("values shape must be (len(y_ticks), len(x_ticks))")
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    im = ax.imshow(values, origin="lower", aspect="auto", vmin=vmin, vmax=vmax, cmap="viridis")
    ax.set_xticks(np.arange(len(x_ticks)))
    ax.set_yticks(np.arange(len(y_ticks)))
    step_x = max(1, len(x_ticks) // 10)
    step_y = max(1, len(y_ticks) // 10)
    ax.set_xticklabels([str(t) if i % step_x == 0 else "" for i, t in enumerate(x_ticks)], fontsize=7)
    ax.set_yticklabels([str(t) if i % step_y == 0 else "" for i, t in enumerate(y_ticks)], fontsize=7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    return _to_svg(fig)
