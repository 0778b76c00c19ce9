"""Aggregate statistics with stratified-bootstrap confidence intervals.

Aggregates (mean, median, IQM, optimality gap) are computed over the pooled
(task, run) scores.  Confidence intervals are percentile-bootstrap: within
each task independently, runs are resampled with replacement (same count),
the aggregate is recomputed per replicate, and the interval is read off the
empirical quantiles (linear interpolation).

Reproducibility contract: the generator is numpy PCG64 (``RNG_ALGORITHM``).
Each task draws its resample indices from its own generator, seeded by
``derive_task_seed(seed, task_id)``, as one ``integers(0, n, size=(reps, n))``
call.  Results are therefore deterministic given the seed and independent of
task iteration order, and archived figures stay reproducible.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curves import AlignedCurve
from .errors import EmptyMatrix, GridMismatch
from .model import ScoreMatrix

RNG_ALGORITHM = "numpy-pcg64"

DEFAULT_OPTIMALITY_THRESHOLD = 1.0


@dataclass(frozen=True)
class AggregateMethod:
    kind: str  # mean | median | iqm | optimality_gap
    threshold: float = DEFAULT_OPTIMALITY_THRESHOLD

    def __post_init__(self):
        if self.kind not in ("mean", "median", "iqm", "optimality_gap"):
            raise ValueError(f"unknown aggregate method {self.kind!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @classmethod
    def mean(cls):
        return cls("mean")

    @classmethod
    def median(cls):
        return cls("median")

    @classmethod
    def iqm(cls):
        return cls("iqm")

    @classmethod
    def optimality_gap(cls, threshold: float = DEFAULT_OPTIMALITY_THRESHOLD):
        return cls("optimality_gap", threshold)

    @property
    def label(self) -> str:
        return {
            "mean": "Mean",
            "median": "Median",
            "iqm": "IQM",
            "optimality_gap": "Optimality Gap",
        }[self.kind]


@dataclass(frozen=True)
class BootstrapConfig:
    reps: int = 2_000
    confidence: float = 0.95
    seed: int = 42

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lo: float
    hi: float
    method: AggregateMethod

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"lo {self.lo} > hi {self.hi}")


@dataclass(frozen=True)
class ProfileCurve:
    taus: np.ndarray
    fractions: np.ndarray
    bands: tuple[np.ndarray, np.ndarray]  # (lo, hi), each per-tau


@dataclass(frozen=True)
class EfficiencyCurve:
    x: np.ndarray
    point: np.ndarray
    bands: tuple[np.ndarray, np.ndarray]
    method: AggregateMethod
    x_axis: str = "global_step"


def derive_task_seed(seed: int, task_id: str) -> int:
    """Stable 64-bit per-task seed; independent of task iteration order."""
    digest = hashlib.sha256(f"{seed}:{task_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _canonical(matrix: ScoreMatrix) -> ScoreMatrix:
    """Reorder tasks by task_id so results are independent of input order.

    Per-task seeding already makes the resample draws order-independent;
    sorting additionally fixes the floating-point summation order when the
    per-task rows are pooled, so intervals are bit-identical under any
    permutation of the input tasks.
    """
    order = sorted(range(len(matrix.task_ids)), key=lambda i: matrix.task_ids[i])
    if order == list(range(len(matrix.task_ids))):
        return matrix
    return ScoreMatrix(
        tuple(matrix.task_ids[i] for i in order),
        tuple(matrix.scores[i] for i in order),
        matrix.method_label,
    )


def _aggregate_pooled(pooled: np.ndarray, method: AggregateMethod, axis: int = -1):
    """Aggregate along the last axis of an array of pooled scores."""
    if method.kind == "mean":
        return np.mean(pooled, axis=axis)
    if method.kind == "median":
        return np.median(pooled, axis=axis)
    if method.kind == "iqm":
        n = pooled.shape[axis]
        trim = int(math.floor(0.25 * n))
        ordered = np.sort(pooled, axis=axis)
        sl = [slice(None)] * ordered.ndim
        sl[axis] = slice(trim, n - trim)
        return np.mean(ordered[tuple(sl)], axis=axis)
    gap = method.threshold - np.minimum(pooled, method.threshold)
    return np.mean(gap, axis=axis)


def aggregate(matrix: ScoreMatrix, method: AggregateMethod) -> float:
    """Point aggregate over all pooled (task, run) scores.

    IQM discards the lowest and highest floor(0.25 * n) scores before
    averaging; the optimality gap is the mean shortfall below the threshold.
    """
    pooled = _canonical(matrix).pooled()
    pooled = pooled[np.isfinite(pooled)]
    if pooled.size == 0:
        raise EmptyMatrix("no finite scores to aggregate")
    return float(_aggregate_pooled(pooled, method))


def _resample_indices(matrix: ScoreMatrix, cfg: BootstrapConfig) -> list[np.ndarray]:
    """Per-task (reps, n_task) resample index arrays; see module docstring."""
    indices = []
    for task_id, row in zip(matrix.task_ids, matrix.scores):
        rng = np.random.default_rng(derive_task_seed(cfg.seed, task_id))
        indices.append(rng.integers(0, row.size, size=(cfg.reps, row.size)))
    return indices


def _bootstrap_pooled(matrix: ScoreMatrix, cfg: BootstrapConfig) -> np.ndarray:
    """(reps, N_total) matrix of pooled resampled scores."""
    indices = _resample_indices(matrix, cfg)
    return np.concatenate(
        [row[idx] for row, idx in zip(matrix.scores, indices)], axis=1
    )


def _quantile_interval(stats: np.ndarray, confidence: float) -> tuple[float, float]:
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def stratified_bootstrap_ci(
    matrix: ScoreMatrix, method: AggregateMethod, cfg: BootstrapConfig
) -> IntervalEstimate:
    """Percentile interval from per-task resampling of runs with replacement."""
    matrix = _canonical(matrix)
    for task_id, row in zip(matrix.task_ids, matrix.scores):
        if row.size == 0:
            raise EmptyMatrix(f"task {task_id!r} has no runs")
    point = aggregate(matrix, method)
    stats = _aggregate_pooled(_bootstrap_pooled(matrix, cfg), method)
    lo, hi = _quantile_interval(stats, cfg.confidence)
    return IntervalEstimate(point=point, lo=lo, hi=hi, method=method)


def _profile_fractions(rows: Sequence[np.ndarray], taus: np.ndarray) -> np.ndarray:
    """F(tau) = mean over tasks of the fraction of runs scoring above tau."""
    per_task = np.stack([
        (row[:, None] > taus[None, :]).mean(axis=0) for row in rows
    ])
    return per_task.mean(axis=0)


def performance_profile(
    matrix: ScoreMatrix, taus: Sequence[float], cfg: BootstrapConfig
) -> ProfileCurve:
    """Fraction of runs above each threshold, with stratified bootstrap bands."""
    matrix = _canonical(matrix)
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 1 or np.any(np.diff(taus) <= 0):
        raise ValueError("taus must be non-empty and strictly increasing")
    fractions = _profile_fractions(matrix.scores, taus)
    indices = _resample_indices(matrix, cfg)
    # (reps, n_tasks, n_taus) of per-task fractions, averaged over tasks.
    per_task = np.stack([
        (row[idx][:, :, None] > taus[None, None, :]).mean(axis=1)
        for row, idx in zip(matrix.scores, indices)
    ], axis=1)
    rep_fractions = per_task.mean(axis=1)
    alpha = (1.0 - cfg.confidence) / 2.0
    lo, hi = np.quantile(rep_fractions, [alpha, 1.0 - alpha], axis=0)
    return ProfileCurve(taus=taus, fractions=fractions, bands=(lo, hi))


def sample_efficiency_curve(
    curves_per_task: Sequence[AlignedCurve],
    task_ids: Sequence[str],
    method: AggregateMethod,
    cfg: BootstrapConfig,
) -> EfficiencyCurve:
    """Aggregate normalized score as a function of the shared x-grid.

    At each grid point the tasks x runs values form a score matrix, and the
    aggregate plus stratified bootstrap interval is computed.  Curves
    aligned on wall time yield the walltime-efficiency variant.
    """
    if not curves_per_task:
        raise EmptyMatrix("no curves given")
    grid = curves_per_task[0].grid
    x_axis = curves_per_task[0].x_axis
    for curve in curves_per_task[1:]:
        if curve.grid.shape != grid.shape or not np.array_equal(curve.grid, grid):
            raise GridMismatch("all curves must share one grid")
        if curve.x_axis != x_axis:
            raise GridMismatch("all curves must share one x-axis")
    task_ids = tuple(task_ids)
    if len(task_ids) != len(curves_per_task):
        raise ValueError("task_ids and curves_per_task length mismatch")
    order = sorted(range(len(task_ids)), key=lambda i: task_ids[i])
    task_ids = tuple(task_ids[i] for i in order)
    curves_per_task = [curves_per_task[i] for i in order]

    rows = [curve.values for curve in curves_per_task]  # each (R_t, G)
    pooled = np.concatenate(rows, axis=0)  # (N_total, G)
    point = _aggregate_pooled(pooled.T, method, axis=-1)

    indices = []
    for task_id, row in zip(task_ids, rows):
        rng = np.random.default_rng(derive_task_seed(cfg.seed, task_id))
        indices.append(rng.integers(0, row.shape[0], size=(cfg.reps, row.shape[0])))
    alpha = (1.0 - cfg.confidence) / 2.0
    lo = np.empty(grid.size)
    hi = np.empty(grid.size)
    for g in range(grid.size):
        rep_pooled = np.concatenate(
            [row[:, g][idx] for row, idx in zip(rows, indices)], axis=1
        )
        stats = _aggregate_pooled(rep_pooled, method)
        lo[g], hi[g] = np.quantile(stats, [alpha, 1.0 - alpha])
    return EfficiencyCurve(
        x=grid, point=np.asarray(point), bands=(lo, hi), method=method, x_axis=x_axis
    )
