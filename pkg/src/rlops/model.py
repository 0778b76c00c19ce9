"""Domain types shared by all modules, plus the score-normalization table.

All types are immutable after construction and safe to share across
concurrent readers.  Missing metric values are represented as explicit NaN
gaps, never as zeros (zero is a legal score).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateReference,
    DuplicateEnv,
    EmptyRunId,
    EmptyTask,
    MalformedConfigKey,
    MalformedTable,
    MissingFile,
    NonMonotonicSeries,
)


@dataclass(frozen=True)
class RunRecord:
    """One tracked experiment run: identity, config, and provenance."""

    run_id: str
    entity: str
    project: str
    name: str
    config: Mapping[str, object]
    created_at: float  # UTC seconds
    command: str | None = None
    git_commit: str | None = None
    dependency_snapshot: str | None = None
    seed: int | None = None
    tags: tuple[str, ...] = ()


def validate_run_record(record: RunRecord) -> RunRecord:
    """Check record invariants and return the record unchanged.

    Idempotent: validating a validated record is a no-op.
    """
    if not record.run_id:
        raise EmptyRunId("run_id must be non-empty")
    for key in record.config:
        if not isinstance(key, str) or not key:
            raise MalformedConfigKey(f"config key {key!r} must be a non-empty string")
    return record


@dataclass(frozen=True)
class MetricPoint:
    """One logged value, linked to a global step and a wall-clock time."""

    global_step: float
    wall_time_s: float
    value: float

    def __post_init__(self):
        if self.global_step < 0:
            raise ValueError(f"global_step must be >= 0, got {self.global_step}")
        if self.wall_time_s < 0:
            raise ValueError(f"wall_time_s must be >= 0, got {self.wall_time_s}")
        if math.isinf(self.value):
            raise ValueError("value must be finite or NaN (explicit gap)")


@dataclass(frozen=True)
class MetricSeries:
    """One metric's time series for one run, sorted by global step."""

    run_id: str
    metric_key: str
    points: tuple[MetricPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        steps = [p.global_step for p in self.points]
        times = [p.wall_time_s for p in self.points]
        if any(b < a for a, b in zip(steps, steps[1:])):
            raise NonMonotonicSeries(
                f"{self.metric_key}: points must be sorted by global_step"
            )
        if any(b < a for a, b in zip(times, times[1:])):
            raise NonMonotonicSeries(
                f"{self.metric_key}: wall_time_s must be non-decreasing"
            )

    def __len__(self) -> int:
        return len(self.points)

    def steps(self) -> np.ndarray:
        return np.array([p.global_step for p in self.points], dtype=float)

    def wall_times(self) -> np.ndarray:
        return np.array([p.wall_time_s for p in self.points], dtype=float)

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=float)

    def relative_times(self) -> np.ndarray:
        """Elapsed seconds since the first logged point."""
        t = self.wall_times()
        return t - t[0] if len(t) else t


@dataclass(frozen=True)
class ScoreMatrix:
    """Per-task, per-run (normalized) final scores.

    Rows may be ragged: real projects have uneven seed counts per task, and
    the stratified statistics resample within each task independently.
    """

    task_ids: tuple[str, ...]
    scores: tuple[np.ndarray, ...]
    method_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "task_ids", tuple(self.task_ids))
        rows = tuple(np.asarray(r, dtype=float) for r in self.scores)
        for row in rows:
            row.setflags(write=False)
        object.__setattr__(self, "scores", rows)
        if len(self.task_ids) < 1:
            raise EmptyTask("a score matrix needs at least one task")
        if len(self.task_ids) != len(rows):
            raise ValueError("task_ids and scores length mismatch")
        for task_id, row in zip(self.task_ids, rows):
            if row.ndim != 1 or row.size < 1 or not np.isfinite(row).any():
                raise EmptyTask(f"task {task_id!r} has no finite score")

    def pooled(self) -> np.ndarray:
        """All (task, run) scores flattened in task order."""
        return np.concatenate(self.scores)

    def map_rows(self, fn) -> "ScoreMatrix":
        return ScoreMatrix(
            self.task_ids,
            tuple(np.asarray(fn(task, row), dtype=float)
                  for task, row in zip(self.task_ids, self.scores)),
            self.method_label,
        )


@dataclass(frozen=True)
class NormalizationTable:
    """env_id -> (random_score, human_score) reference scores."""

    entries: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        entries = dict(self.entries)
        for env_id, (random_score, human_score) in entries.items():
            if human_score == random_score:
                raise DegenerateReference(
                    f"{env_id}: human score equals random score ({human_score})"
                )
        object.__setattr__(self, "entries", entries)

    def __contains__(self, env_id: str) -> bool:
        return env_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, env_id: str) -> tuple[float, float]:
        return self.entries[env_id]


NORMALIZATION_TABLE_HEADER = ["env_id", "random_score", "human_score"]


def load_normalization_table(path) -> NormalizationTable:
    """Load the reference-score CSV (header ``env_id,random_score,human_score``)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"normalization table not found: {path}")
    entries: dict[str, tuple[float, float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != NORMALIZATION_TABLE_HEADER:
            raise MalformedTable(
                f"{path}: expected header {','.join(NORMALIZATION_TABLE_HEADER)}, "
                f"got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedTable(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            env_id, random_raw, human_raw = row
            try:
                random_score, human_score = float(random_raw), float(human_raw)
            except ValueError as exc:
                raise MalformedTable(f"{path}:{lineno}: {exc}") from exc
            if env_id in entries:
                raise DuplicateEnv(f"{path}:{lineno}: duplicate env_id {env_id!r}")
            if human_score == random_score:
                raise DegenerateReference(
                    f"{path}:{lineno}: {env_id}: human score equals random score"
                )
            entries[env_id] = (random_score, human_score)
    return NormalizationTable(entries)
