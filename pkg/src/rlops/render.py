"""Figure grids and summary tables, written as deterministic SVG + PNG.

SVG output is byte-deterministic for identical inputs: the element-id hash
salt is pinned, no timestamp metadata is written, and colors are assigned by
a stable hash of the series label from a fixed 10-color palette (so a method
keeps its color across figures).  The PNG is a 200 DPI rasterization of the
same figure.

Shaded areas are an explicit per-figure choice (standard deviation or
confidence interval) and the choice is printed in the legend title, since
readers cannot be expected to guess.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

from .errors import EmptyFigure
from .rlstats import IntervalEstimate, ProfileCurve

#: Fixed palette (matplotlib "tab10"), indexed by label hash.
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

_SVG_RC = {
    "svg.hashsalt": "rlops",
    "svg.fonttype": "none",
    "figure.max_open_warning": 0,
}

BAND_LABELS = {"std": "shaded: std", "ci": "shaded: 95% CI"}


def color_for_label(label: str, overrides: Mapping[str, str] | None = None) -> str:
    """Deterministic palette color for a series label."""
    if overrides and label in overrides:
        return overrides[label]
    digest = hashlib.sha256(label.encode("utf-8")).hexdigest()
    return PALETTE[int(digest, 16) % len(PALETTE)]


@dataclass(frozen=True)
class PlotConfig:
    ncols: int = 2
    ncols_legend: int = 2
    xlabel: str = "Steps"
    ylabel: str = "Episodic Return"
    max_steps: float | None = None
    figsize: tuple[float, float] | None = None
    colors: Mapping[str, str] | None = None

    def __post_init__(self):
        if self.ncols < 1 or self.ncols_legend < 1:
            raise ValueError("ncols and ncols_legend must be >= 1")


@dataclass(frozen=True)
class LabeledSeries:
    label: str
    x: np.ndarray
    y: np.ndarray
    band: tuple[np.ndarray, np.ndarray] | None = None  # (lo, hi)


@dataclass(frozen=True)
class Panel:
    title: str
    series: tuple[LabeledSeries, ...]


@dataclass(frozen=True)
class FigureSpec:
    panels: tuple[Panel, ...]
    band_kind: str | None = None  # 'std' | 'ci' | None

    def __post_init__(self):
        object.__setattr__(self, "panels", tuple(self.panels))
        if not self.panels:
            raise EmptyFigure("a figure needs at least one panel")


def _grid_shape(n_panels: int, ncols: int) -> tuple[int, int]:
    ncols = min(ncols, n_panels)
    return math.ceil(n_panels / ncols), ncols


def _legend_title(band_kind: str | None) -> str | None:
    return BAND_LABELS.get(band_kind) if band_kind else None


def _make_grid_figure(n_panels: int, cfg: PlotConfig) -> tuple[Figure, list]:
    nrows, ncols = _grid_shape(n_panels, cfg.ncols)
    figsize = cfg.figsize or (4.0 * ncols, 3.0 * nrows + 0.8)
    fig, axes = plt.subplots(nrows, ncols, figsize=figsize, squeeze=False)
    flat = [ax for row in axes for ax in row]
    for ax in flat[n_panels:]:
        ax.set_visible(False)
    return fig, flat[:n_panels]


def _finish(fig: Figure, labels: Sequence[str], cfg: PlotConfig,
            band_kind: str | None) -> None:
    handles = [
        Line2D([0], [0], color=color_for_label(label, cfg.colors), lw=2)
        for label in labels
    ]
    fig.legend(
        handles,
        list(labels),
        loc="lower center",
        ncol=min(cfg.ncols_legend, max(len(labels), 1)),
        title=_legend_title(band_kind),
        frameon=False,
    )
    fig.tight_layout(rect=(0, 0.12, 1, 1))


def build_curve_grid(spec: FigureSpec, cfg: PlotConfig) -> Figure:
    """Build the figure for render_curve_grid (exposed for inspection)."""
    fig, axes = _make_grid_figure(len(spec.panels), cfg)
    labels: list[str] = []
    for panel_idx, (panel, ax) in enumerate(zip(spec.panels, axes)):
        for series in panel.series:
            color = color_for_label(series.label, cfg.colors)
            if series.band is not None:
                lo, hi = series.band
                poly = ax.fill_between(series.x, lo, hi, color=color, alpha=0.25,
                                       linewidth=0)
                poly.set_gid(f"band::{panel_idx}::{series.label}")
            ax.plot(series.x, series.y, color=color, label=series.label)
            if series.label not in labels:
                labels.append(series.label)
        ax.set_title(panel.title)
        ax.set_xlabel(cfg.xlabel)
        ax.set_ylabel(cfg.ylabel)
        if cfg.max_steps is not None:
            ax.set_xlim(right=cfg.max_steps)
    _finish(fig, labels, cfg, spec.band_kind)
    return fig


def save_figure(fig: Figure, out_base) -> list[Path]:
    """Write <out_base>.svg and <out_base>.png; SVG bytes are deterministic."""
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    svg_path = out_base.with_suffix(out_base.suffix + ".svg")
    png_path = out_base.with_suffix(out_base.suffix + ".png")
    with plt.rc_context(_SVG_RC):
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        fig.savefig(png_path, format="png", dpi=200)
    plt.close(fig)
    return [svg_path, png_path]


def render_curve_grid(spec: FigureSpec, cfg: PlotConfig, out_base) -> list[Path]:
    """One panel per entry, mean line + shaded band per labeled series."""
    return save_figure(build_curve_grid(spec, cfg), out_base)


def build_interval_estimates(
    estimates: Mapping[str, Sequence[IntervalEstimate]], cfg: PlotConfig
) -> Figure:
    if not estimates:
        raise EmptyFigure("no interval estimates given")
    methods = list(estimates)
    aggregators: list[str] = []
    for group in estimates.values():
        for est in group:
            if est.method.label not in aggregators:
                aggregators.append(est.method.label)
    fig, axes = _make_grid_figure(len(aggregators), cfg)
    for agg_name, ax in zip(aggregators, axes):
        for pos, method in enumerate(methods):
            est = next((e for e in estimates[method] if e.method.label == agg_name), None)
            if est is None:
                continue
            y = len(methods) - 1 - pos
            color = color_for_label(method, cfg.colors)
            bar = ax.barh(y, est.hi - est.lo, left=est.lo, height=0.6,
                          color=color, alpha=0.6)
            bar[0].set_gid(f"interval::{agg_name}::{method}")
            ax.plot([est.point], [y], marker="|", markersize=14, color=color)
        ax.set_yticks(range(len(methods)))
        ax.set_yticklabels(list(reversed(methods)))
        ax.set_title(agg_name)
        ax.set_xlabel(cfg.xlabel)
    _finish(fig, methods, cfg, "ci")
    return fig


def render_interval_estimates(
    estimates: Mapping[str, Sequence[IntervalEstimate]], cfg: PlotConfig, out_base
) -> list[Path]:
    """One subpanel per aggregator, one horizontal CI bar per method."""
    return save_figure(build_interval_estimates(estimates, cfg), out_base)


def build_performance_profiles(
    profiles: Mapping[str, ProfileCurve], cfg: PlotConfig, norm_label: str = ""
) -> Figure:
    if not profiles:
        raise EmptyFigure("no profiles given")
    figsize = cfg.figsize or (6.0, 4.5)
    fig, ax = plt.subplots(figsize=figsize)
    for label, profile in profiles.items():
        color = color_for_label(label, cfg.colors)
        lo, hi = profile.bands
        poly = ax.fill_between(profile.taus, lo, hi, color=color, alpha=0.25,
                               linewidth=0)
        poly.set_gid(f"band::0::{label}")
        ax.plot(profile.taus, profile.fractions, color=color, label=label,
                drawstyle="steps-post" if profile.taus.size > 1 else "default")
    suffix = f" ({norm_label} normalized score)" if norm_label else ""
    ax.set_xlabel(f"Score threshold τ{suffix}")
    ax.set_ylabel("Fraction of runs with score > τ")
    ax.set_ylim(-0.02, 1.02)
    _finish(fig, list(profiles), cfg, "ci")
    return fig


def render_performance_profiles(
    profiles: Mapping[str, ProfileCurve], cfg: PlotConfig, out_base,
    norm_label: str = "",
) -> list[Path]:
    """Step plot of score-threshold profiles with bootstrap bands."""
    return save_figure(build_performance_profiles(profiles, cfg, norm_label), out_base)


# --- tables ---------------------------------------------------------------

TABLE_COLUMNS = ("method", "aggregator", "point", "lo", "hi")


def format_sig4(x: float) -> str:
    return f"{x:.4g}"


def _table_rows(summaries: Mapping[str, Sequence[IntervalEstimate]]):
    for method, group in summaries.items():
        for est in group:
            yield method, est.method.label, est.point, est.lo, est.hi


def emit_summary_table(
    summaries: Mapping[str, Sequence[IntervalEstimate]], format: str, out
) -> Path:
    """Write per-method aggregate summaries as CSV (full precision) or markdown.

    Both formats carry the same values; markdown rounds to 4 significant
    digits for readability.
    """
    if not summaries:
        raise EmptyFigure("no summaries given")
    if format not in ("csv", "markdown"):
        raise ValueError(f"unknown table format {format!r}")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if format == "csv":
        lines.append(",".join(TABLE_COLUMNS))
        for method, agg, point, lo, hi in _table_rows(summaries):
            lines.append(f"{method},{agg},{point!r},{lo!r},{hi!r}")
    else:
        lines.append("| " + " | ".join(TABLE_COLUMNS) + " |")
        lines.append("|" + "---|" * len(TABLE_COLUMNS))
        for method, agg, point, lo, hi in _table_rows(summaries):
            lines.append(
                f"| {method} | {agg} | {format_sig4(point)} | "
                f"{format_sig4(lo)} | {format_sig4(hi)} |"
            )
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
