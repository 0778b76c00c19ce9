"""Score normalization and reduction of aligned curves to final scores."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .curves import AlignedCurve
from .errors import EmptyTask, EnvNotInTable
from .model import NormalizationTable, ScoreMatrix


class DegenerateTaskWarning(UserWarning):
    """A task's pooled scores are all equal; min-max maps them to 0.5."""


@dataclass(frozen=True)
class NormalizationMethod:
    """One of: reference-table ('atari'), per-task study-wide 'minmax', 'none'."""

    kind: str
    table: NormalizationTable | None = None

    def __post_init__(self):
        if self.kind not in ("atari", "minmax", "none"):
            raise ValueError(f"unknown normalization method {self.kind!r}")
        if self.kind == "atari" and self.table is None:
            raise ValueError("atari normalization requires a reference table")

    @classmethod
    def atari(cls, table: NormalizationTable) -> "NormalizationMethod":
        return cls("atari", table)

    @classmethod
    def minmax(cls) -> "NormalizationMethod":
        return cls("minmax")

    @classmethod
    def none(cls) -> "NormalizationMethod":
        return cls("none")


def normalize_atari(raw, env_id: str, table: NormalizationTable):
    """(raw - random) / (human - random); may exceed 1 or go negative."""
    if env_id not in table:
        raise EnvNotInTable(f"env {env_id!r} not in normalization table")
    random_score, human_score = table[env_id]
    return (np.asarray(raw, dtype=float) - random_score) / (human_score - random_score)


def minmax_bounds(matrices: Sequence[ScoreMatrix]) -> list[tuple[float, float]]:
    """Per-task (min, max) pooled across every experiment in the comparison.

    Tasks correspond positionally across matrices (every matrix must have
    the same number of tasks).
    """
    if not matrices:
        raise EmptyTask("no matrices to pool")
    n_tasks = len(matrices[0].task_ids)
    for m in matrices:
        if len(m.task_ids) != n_tasks:
            raise EmptyTask("matrices disagree on the number of tasks")
    bounds = []
    for i in range(n_tasks):
        pooled = np.concatenate([m.scores[i] for m in matrices])
        pooled = pooled[np.isfinite(pooled)]
        bounds.append((float(pooled.min()), float(pooled.max())))
    return bounds


def apply_minmax(matrix: ScoreMatrix, bounds: Sequence[tuple[float, float]]) -> ScoreMatrix:
    """Affinely map each task's scores into [0, 1] using the given bounds.

    Degenerate tasks (min == max) map every score to 0.5, with a warning.
    """
    rows = []
    for task_id, row, (lo, hi) in zip(matrix.task_ids, matrix.scores, bounds):
        if hi == lo:
            warnings.warn(
                f"task {task_id!r}: all pooled scores equal {lo}; mapping to 0.5",
                DegenerateTaskWarning,
                stacklevel=2,
            )
            rows.append(np.full_like(row, 0.5))
        else:
            rows.append((row - lo) / (hi - lo))
    return ScoreMatrix(matrix.task_ids, tuple(rows), matrix.method_label)


def normalize_minmax(matrix: ScoreMatrix) -> ScoreMatrix:
    """Min-max normalize per task using the matrix's own pooled scores.

    The input is expected to pool all compared experiments; to normalize
    per-experiment matrices against shared study-wide extremes, combine
    :func:`minmax_bounds` with :func:`apply_minmax`.
    """
    return apply_minmax(matrix, minmax_bounds([matrix]))


def final_scores(curve: AlignedCurve, tail_fraction: float = 0.1) -> np.ndarray:
    """Per-run mean over the last ceil(tail_fraction * G) grid points."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    tail = math.ceil(tail_fraction * curve.grid.size)
    return curve.values[:, -tail:].mean(axis=1)


def build_score_matrix(
    groups: Mapping[str, Sequence[float]],
    method: NormalizationMethod,
    method_label: str = "",
) -> ScoreMatrix:
    """Assemble per-task final scores into a (possibly ragged) ScoreMatrix.

    ``groups`` maps task id to that task's per-run final scores; iteration
    order fixes the task order.
    """
    task_ids = tuple(groups)
    if not task_ids:
        raise EmptyTask("no tasks given")
    rows = tuple(np.asarray(groups[t], dtype=float) for t in task_ids)
    matrix = ScoreMatrix(task_ids, rows, method_label)
    if method.kind == "none":
        return matrix
    if method.kind == "atari":
        return matrix.map_rows(
            lambda task, row: normalize_atari(row, task, method.table)
        )
    return normalize_minmax(matrix)


def normalize_curve(
    curve: AlignedCurve,
    env_id: str,
    method: NormalizationMethod,
    bounds: tuple[float, float] | None = None,
) -> AlignedCurve:
    """Apply the score normalization pointwise to an aligned curve's values.

    For min-max, ``bounds`` must carry the task's study-wide (min, max)
    derived from final scores, so curves and score matrices share one map.
    """
    if method.kind == "none":
        return curve
    if method.kind == "atari":
        values = normalize_atari(curve.values, env_id, method.table)
    else:
        if bounds is None:
            raise ValueError("minmax curve normalization needs explicit bounds")
        lo, hi = bounds
        values = np.full_like(curve.values, 0.5) if hi == lo else (curve.values - lo) / (hi - lo)
    return AlignedCurve(curve.x_axis, curve.grid, values, curve.run_ids)
