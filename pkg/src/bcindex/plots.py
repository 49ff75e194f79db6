"""Static SVG renderings: path plot, dot plot, dual-axis comparison.

Rendering is pinned for byte-reproducible output (fixed hash salt, no date
metadata), so repeated runs of a subcommand produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402

from .covid import PipelineResult  # noqa: E402
from .vintage import DotSeries, Path  # noqa: E402


def _new_figure():
    plt.rcParams["svg.hashsalt"] = "bcindex"
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m-%d"))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, outfile) -> None:
    fig.autofmt_xdate()
    fig.savefig(outfile, format="svg", metadata={"Date": None})
    plt.close(fig)


def path_plot(paths: list[Path], outfile, comparison: Path | None = None) -> None:
    """All real-time paths in black with an optional comparison path in red."""
    fig, ax = _new_figure()
    for p in paths:
        ax.plot(p.dates(), p.values, color="black", lw=0.6, alpha=0.7)
    if comparison is not None:
        ax.plot(comparison.dates(), comparison.values, color="red", lw=1.4)
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_ylabel("index")
    _save(fig, outfile)


def dot_plot(dots: DotSeries, outfile, comparison: Path | None = None) -> None:
    """Each vintage's final (filtered) value, with an optional comparison path."""
    fig, ax = _new_figure()
    stamps = [s for s, _ in dots.points]
    ax.plot(stamps, dots.values(), "o", color="black", ms=3.5)
    if comparison is not None:
        ax.plot(comparison.dates(), comparison.values, color="red", lw=1.4)
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_ylabel("index")
    _save(fig, outfile)


def dual_axis_plot(result: PipelineResult, outfile) -> None:
    """Index on the left axis against the smoothed comparison series on the right."""
    fig, ax = _new_figure()
    dates = result.dates()
    ax.plot(dates, result.index_values, color="black", lw=1.0, label="index")
    ax.set_ylabel("index")
    ax2 = ax.twinx()
    ax2.plot(dates, result.smoothed_values, color="red", lw=1.0)
    ax2.set_ylabel(f"comparison (lead {result.lead_days}d, HP {result.hp_lambda:g})")
    _save(fig, outfile)
