"""Resample, smooth, and align per-run metric series onto common grids.

All interpolation is linear; no higher-order smoothing, so the figure
pipeline stays auditable.  The rolling average is trailing (no lookahead)
with partial windows during warm-up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, NonPositiveWindow, NoOverlap, TooFewPoints
from .model import MetricPoint, MetricSeries

X_GLOBAL_STEP = "global_step"
X_WALL_TIME = "wall_time_s"


@dataclass(frozen=True)
class AlignedCurve:
    """Several runs' series resampled onto one shared x-grid."""

    x_axis: str  # X_GLOBAL_STEP or X_WALL_TIME
    grid: np.ndarray  # strictly increasing, shape (G,)
    values: np.ndarray  # shape (R, G)
    run_ids: tuple[str, ...]

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "run_ids", tuple(self.run_ids))
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be 1-D and strictly increasing")
        if values.shape != (len(self.run_ids), grid.size):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"({len(self.run_ids)}, {grid.size})"
            )
        if len(self.run_ids) < 1:
            raise EmptyInput("an aligned curve needs at least one run")


@dataclass(frozen=True)
class AlignSpec:
    grid_size: int = 10_000
    max_steps: float | None = None
    x_axis: str = X_GLOBAL_STEP

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError(f"grid_size must be >= 2, got {self.grid_size}")
        if self.x_axis not in (X_GLOBAL_STEP, X_WALL_TIME):
            raise ValueError(f"unknown x_axis {self.x_axis!r}")


def subsample_interpolate(series: MetricSeries, n: int) -> MetricSeries:
    """Resample onto n evenly spaced steps between the first and last step.

    Values and wall times are linearly interpolated; both endpoints are
    reproduced exactly.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if len(series) < 2:
        raise TooFewPoints(f"{series.metric_key}: need >= 2 points, have {len(series)}")
    steps = series.steps()
    grid = np.linspace(steps[0], steps[-1], n)
    values = np.interp(grid, steps, series.values())
    times = np.interp(grid, steps, series.wall_times())
    return MetricSeries(
        run_id=series.run_id,
        metric_key=series.metric_key,
        points=tuple(
            MetricPoint(global_step=s, wall_time_s=t, value=v)
            for s, t, v in zip(grid, times, values)
        ),
    )


def rolling_values(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean with partial windows at the start."""
    if window < 1:
        raise NonPositiveWindow(f"window must be >= 1, got {window}")
    values = np.asarray(values, dtype=float)
    if values.size == 0 or window == 1:
        return values.copy()
    csum = np.cumsum(values)
    out = np.empty_like(csum)
    head = min(window, values.size)
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if values.size > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def rolling_average(series: MetricSeries, window: int) -> MetricSeries:
    """Smooth values with a trailing window; steps and wall times unchanged."""
    smoothed = rolling_values(series.values(), window)
    return MetricSeries(
        run_id=series.run_id,
        metric_key=series.metric_key,
        points=tuple(
            MetricPoint(p.global_step, p.wall_time_s, v)
            for p, v in zip(series.points, smoothed)
        ),
    )


def _x_values(series: MetricSeries, x_axis: str) -> np.ndarray:
    if x_axis == X_WALL_TIME:
        return series.relative_times()
    return series.steps()


def align_runs(series_per_run: Sequence[MetricSeries], spec: AlignSpec) -> AlignedCurve:
    """Interpolate each run onto one grid of spec.grid_size points from 0 to U.

    U is the shortest run's last x-value, clamped by spec.max_steps.  Grid
    points before a run's first sample take the first observed value, so
    early steps are never silently dropped.
    """
    if not series_per_run:
        raise EmptyInput("align_runs needs at least one run")
    xs, vs = [], []
    for series in series_per_run:
        if len(series) < 2:
            raise TooFewPoints(
                f"run {series.run_id}: need >= 2 points, have {len(series)}"
            )
        xs.append(_x_values(series, spec.x_axis))
        vs.append(series.values())
    upper = min(float(x[-1]) for x in xs)
    if spec.max_steps is not None:
        upper = min(upper, float(spec.max_steps))
    if upper <= 0:
        raise NoOverlap(f"shared x-range is empty (upper bound {upper})")
    grid = np.linspace(0.0, upper, spec.grid_size)
    values = np.vstack([np.interp(grid, x, v) for x, v in zip(xs, vs)])
    return AlignedCurve(
        x_axis=spec.x_axis,
        grid=grid,
        values=values,
        run_ids=tuple(s.run_id for s in series_per_run),
    )


def align_to_grid(
    series_per_run: Sequence[MetricSeries], grid: np.ndarray, x_axis: str
) -> AlignedCurve:
    """Interpolate runs onto an externally supplied grid (shared-grid pipelines)."""
    if not len(series_per_run):
        raise EmptyInput("align_to_grid needs at least one run")
    grid = np.asarray(grid, dtype=float)
    rows = []
    for series in series_per_run:
        if len(series) < 2:
            raise TooFewPoints(
                f"run {series.run_id}: need >= 2 points, have {len(series)}"
            )
        rows.append(np.interp(grid, _x_values(series, x_axis), series.values()))
    return AlignedCurve(
        x_axis=x_axis,
        grid=grid,
        values=np.vstack(rows),
        run_ids=tuple(s.run_id for s in series_per_run),
    )
