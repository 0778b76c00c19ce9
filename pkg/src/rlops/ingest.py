"""Run sources: local archives and the remote tracking HTTP API, plus a cache.

Archive layout::

    <root>/<entity>/<project>/runs.jsonl
    <root>/<entity>/<project>/history/<run_id>/<sanitized_metric>.csv

where the metric key is sanitized by replacing '/' with '__' and the CSV
header is ``global_step,wall_time_s,value``.  Floats are serialized with
full precision, so save -> load round-trips bit-exactly.

Remote protocol::

    GET /api/v1/{entity}/{project}/runs?{config filters}      -> JSON array
    GET /api/v1/{entity}/{project}/runs/{run_id}/history?metric={key}&scan={bool}
                                                              -> CSV body

Auth is ``Authorization: Bearer <token>`` with the token taken from
``RLOPS_API_KEY``.  Without scan mode, histories are sampled down to at most
500 points, uniformly spaced by index, endpoints included; the sampled point
set is always a subset of the full one.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import (
    MalformedArchive,
    MetricNotFound,
    NoRunsFound,
    ProjectNotFound,
    RunNotFound,
    SourceUnreachable,
)
from .filterdsl import ExperimentSpec, FilterQuery
from .model import MetricPoint, MetricSeries, RunRecord, validate_run_record

SAMPLED_HISTORY_CAP = 500
HISTORY_HEADER = ["global_step", "wall_time_s", "value"]

API_KEY_ENV = "RLOPS_API_KEY"


class IngestWarning(UserWarning):
    pass


def sanitize_metric_key(metric_key: str) -> str:
    return metric_key.replace("/", "__")


def sampled_indices(n: int, cap: int = SAMPLED_HISTORY_CAP) -> np.ndarray:
    """At most ``cap`` indices into range(n), uniform by index, endpoints kept."""
    if n <= cap:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, cap)).astype(int))


def _sample_series(series: MetricSeries, scan: bool) -> MetricSeries:
    if scan or len(series) <= SAMPLED_HISTORY_CAP:
        return series
    keep = sampled_indices(len(series))
    return MetricSeries(
        run_id=series.run_id,
        metric_key=series.metric_key,
        points=tuple(series.points[i] for i in keep),
    )


def _format_float(x: float) -> str:
    """Shortest exact decimal; integral values render without a fraction."""
    if math.isnan(x):
        return "nan"
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _match_config(config, key: str, wanted: str) -> bool:
    return key in config and str(config[key]) == str(wanted)


def _sort_runs(runs: Iterable[RunRecord]) -> list[RunRecord]:
    return sorted(runs, key=lambda r: (r.created_at, r.run_id))


def _filter_runs(
    runs: Iterable[RunRecord], query: FilterQuery, spec: ExperimentSpec, env_id: str
) -> list[RunRecord]:
    matched = []
    for run in runs:
        if not _match_config(run.config, query.env_id_key, env_id):
            continue
        if not _match_config(run.config, query.exp_name_key, spec.name):
            continue
        if any(not _match_config(run.config, k, v) for k, v in spec.extra_filters.items()):
            continue
        matched.append(run)
    if not matched:
        raise NoRunsFound(
            f"no runs match spec {spec.name!r} with "
            f"{query.env_id_key}={env_id!r} in {query.entity}/{query.project}"
        )
    return _sort_runs(matched)


# --- serialization helpers ---------------------------------------------

def run_to_json(run: RunRecord) -> str:
    return json.dumps(
        {
            "run_id": run.run_id,
            "entity": run.entity,
            "project": run.project,
            "name": run.name,
            "config": dict(run.config),
            "created_at": run.created_at,
            "command": run.command,
            "git_commit": run.git_commit,
            "dependency_snapshot": run.dependency_snapshot,
            "seed": run.seed,
            "tags": list(run.tags),
        },
        sort_keys=True,
    )


def run_from_json(data: dict) -> RunRecord:
    return validate_run_record(RunRecord(
        run_id=data["run_id"],
        entity=data["entity"],
        project=data["project"],
        name=data.get("name", ""),
        config=data.get("config", {}),
        created_at=float(data.get("created_at", 0.0)),
        command=data.get("command"),
        git_commit=data.get("git_commit"),
        dependency_snapshot=data.get("dependency_snapshot"),
        seed=data.get("seed"),
        tags=tuple(data.get("tags", ())),
    ))


def series_to_csv(series: MetricSeries) -> str:
    lines = [",".join(HISTORY_HEADER)]
    for p in series.points:
        lines.append(
            f"{_format_float(p.global_step)},{_format_float(p.wall_time_s)},"
            f"{_format_float(p.value)}"
        )
    return "\n".join(lines) + "\n"


def series_from_csv(text: str, run_id: str, metric_key: str, origin: str = "<csv>") -> MetricSeries:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:3]] != HISTORY_HEADER:
        raise MalformedArchive(f"{origin}: expected header {','.join(HISTORY_HEADER)}")
    points = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < 3:
            raise MalformedArchive(f"{origin}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            # Extra trailing columns are preserved upstream and ignored here.
            points.append(MetricPoint(float(row[0]), float(row[1]), float(row[2])))
        except ValueError as exc:
            raise MalformedArchive(f"{origin}:{lineno}: {exc}") from exc
    try:
        return MetricSeries(run_id=run_id, metric_key=metric_key, points=tuple(points))
    except Exception as exc:
        raise MalformedArchive(f"{origin}: {exc}") from exc


# --- archive source -----------------------------------------------------

class ArchiveSource:
    """Read-only run source backed by the on-disk archive layout."""

    def __init__(self, root):
        self.root = Path(root)
        self.request_count = 0  # number of underlying reads, for cache tests

    def _project_dir(self, entity: str, project: str) -> Path:
        path = self.root / entity / project
        if not (path / "runs.jsonl").is_file():
            raise ProjectNotFound(f"no archive project at {path}")
        return path

    def _load_runs(self, entity: str, project: str) -> list[RunRecord]:
        path = self._project_dir(entity, project) / "runs.jsonl"
        runs = []
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    runs.append(run_from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise MalformedArchive(f"{path}:{lineno}: {exc}") from exc
        return runs

    def iter_runs(self, entity: str, project: str) -> list[RunRecord]:
        self.request_count += 1
        return self._load_runs(entity, project)

    def get_run(self, entity: str, project: str, run_id: str) -> RunRecord:
        for run in self.iter_runs(entity, project):
            if run.run_id == run_id:
                return run
        raise RunNotFound(f"run {entity}/{project}/{run_id} not found")

    def query_runs(
        self, query: FilterQuery, spec: ExperimentSpec, env_id: str
    ) -> list[RunRecord]:
        self.request_count += 1
        return _filter_runs(self._load_runs(query.entity, query.project), query, spec, env_id)

    def fetch_history(
        self, run: RunRecord, metric_keys: Sequence[str], scan: bool
    ) -> list[MetricSeries]:
        self.request_count += 1
        history_dir = self._project_dir(run.entity, run.project) / "history" / run.run_id
        if not history_dir.is_dir():
            raise RunNotFound(f"no history for run {run.run_id} under {history_dir}")
        out, missing = [], []
        for key in metric_keys:
            path = history_dir / f"{sanitize_metric_key(key)}.csv"
            if not path.is_file():
                missing.append(key)
                continue
            series = series_from_csv(
                path.read_text(encoding="utf-8"), run.run_id, key, origin=str(path)
            )
            out.append(_sample_series(series, scan))
        if missing:
            if not out:
                raise MetricNotFound(
                    f"run {run.run_id}: no requested metric found ({', '.join(missing)})"
                )
            warnings.warn(
                f"run {run.run_id}: metrics not found: {', '.join(missing)}",
                IngestWarning,
                stacklevel=2,
            )
        return out


def save_archive(root, runs: Sequence[RunRecord], histories: Sequence[MetricSeries]) -> None:
    """Write runs and their histories in the archive layout."""
    root = Path(root)
    by_run = {run.run_id: run for run in runs}
    by_project: dict[tuple[str, str], list[RunRecord]] = {}
    for run in runs:
        by_project.setdefault((run.entity, run.project), []).append(run)
    for (entity, project), project_runs in by_project.items():
        project_dir = root / entity / project
        project_dir.mkdir(parents=True, exist_ok=True)
        with (project_dir / "runs.jsonl").open("w", encoding="utf-8") as fh:
            for run in project_runs:
                fh.write(run_to_json(run) + "\n")
    seen: dict[Path, str] = {}
    for series in histories:
        run = by_run.get(series.run_id)
        if run is None:
            raise MalformedArchive(f"history for unknown run {series.run_id!r}")
        history_dir = root / run.entity / run.project / "history" / run.run_id
        history_dir.mkdir(parents=True, exist_ok=True)
        path = history_dir / f"{sanitize_metric_key(series.metric_key)}.csv"
        if path in seen and seen[path] != series.metric_key:
            raise MalformedArchive(
                f"metric keys {seen[path]!r} and {series.metric_key!r} "
                f"collide at {path}"
            )
        seen[path] = series.metric_key
        path.write_text(series_to_csv(series), encoding="utf-8")


def load_archive(root) -> ArchiveSource:
    """Validate an archive eagerly and return a source over it."""
    root = Path(root)
    if not root.is_dir():
        raise MalformedArchive(f"archive root {root} is not a directory")
    source = ArchiveSource(root)
    for runs_file in sorted(root.glob("*/*/runs.jsonl")):
        project_dir = runs_file.parent
        entity, project = project_dir.parent.name, project_dir.name
        runs = {run.run_id for run in source._load_runs(entity, project)}
        for csv_path in sorted(project_dir.glob("history/*/*.csv")):
            run_id = csv_path.parent.name
            if run_id not in runs:
                raise MalformedArchive(f"{csv_path}: history for unknown run {run_id!r}")
            series_from_csv(
                csv_path.read_text(encoding="utf-8"),
                run_id,
                csv_path.stem.replace("__", "/"),
                origin=str(csv_path),
            )
    return source


# --- remote source ------------------------------------------------------

class RemoteSource:
    """Client for the JSON-over-HTTP tracking-service contract."""

    def __init__(self, base_url: str, token: str | None = None, session=None):
        self.base_url = base_url.rstrip("/")
        self.token = token if token is not None else os.environ.get(API_KEY_ENV)
        self.session = session or requests.Session()
        self.request_count = 0

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def _get(self, url: str, params: dict) -> requests.Response:
        self.request_count += 1
        try:
            response = self.session.get(url, params=params, headers=self._headers())
        except requests.RequestException as exc:
            raise SourceUnreachable(f"cannot reach {url}: {exc}") from exc
        return response

    def query_runs(
        self, query: FilterQuery, spec: ExperimentSpec, env_id: str
    ) -> list[RunRecord]:
        url = f"{self.base_url}/api/v1/{query.entity}/{query.project}/runs"
        params = {query.env_id_key: env_id, query.exp_name_key: spec.name}
        params.update(spec.extra_filters)
        response = self._get(url, params)
        if response.status_code == 404:
            raise ProjectNotFound(f"{query.entity}/{query.project} not found")
        response.raise_for_status()
        runs = [run_from_json(item) for item in response.json()]
        # The server already filters; re-filter and re-sort defensively so
        # output order is a pure function of inputs.
        return _filter_runs(runs, query, spec, env_id)

    def get_run(self, entity: str, project: str, run_id: str) -> RunRecord:
        url = f"{self.base_url}/api/v1/{entity}/{project}/runs"
        response = self._get(url, {})
        if response.status_code == 404:
            raise ProjectNotFound(f"{entity}/{project} not found")
        response.raise_for_status()
        for item in response.json():
            run = run_from_json(item)
            if run.run_id == run_id:
                return run
        raise RunNotFound(f"run {entity}/{project}/{run_id} not found")

    def fetch_history(
        self, run: RunRecord, metric_keys: Sequence[str], scan: bool
    ) -> list[MetricSeries]:
        out, missing = [], []
        for key in metric_keys:
            url = (
                f"{self.base_url}/api/v1/{run.entity}/{run.project}"
                f"/runs/{run.run_id}/history"
            )
            response = self._get(url, {"metric": key, "scan": "true" if scan else "false"})
            if response.status_code == 404:
                missing.append(key)
                continue
            response.raise_for_status()
            series = series_from_csv(response.text, run.run_id, key, origin=url)
            out.append(_sample_series(series, scan))
        if missing:
            if not out:
                raise MetricNotFound(
                    f"run {run.run_id}: no requested metric found ({', '.join(missing)})"
                )
            warnings.warn(
                f"run {run.run_id}: metrics not found: {', '.join(missing)}",
                IngestWarning,
                stacklevel=2,
            )
        return out


# --- cache ---------------------------------------------------------------

@dataclass(frozen=True)
class CacheKey:
    entity: str
    project: str
    run_id: str
    metric_key: str
    scan_mode: bool

    def digest(self) -> str:
        raw = "\x1f".join(
            [self.entity, self.project, self.run_id, self.metric_key,
             "scan" if self.scan_mode else "sampled"]
        )
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()

    def path(self, cache_dir) -> Path:
        return Path(cache_dir) / f"{self.digest()}.csv"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cached_fetch(
    source, run: RunRecord, metric_keys: Sequence[str], scan: bool, cache_dir
) -> list[MetricSeries]:
    """fetch_history with a content-addressed on-disk cache.

    Cache hits return without contacting the source; corrupt entries are
    treated as misses and rewritten.  Writes are atomic (temp + rename), so
    concurrent writers are safe.
    """
    cache_dir = Path(cache_dir)
    out: dict[str, MetricSeries] = {}
    to_fetch = []
    for key in metric_keys:
        path = CacheKey(run.entity, run.project, run.run_id, key, scan).path(cache_dir)
        if path.is_file():
            try:
                out[key] = series_from_csv(
                    path.read_text(encoding="utf-8"), run.run_id, key, origin=str(path)
                )
                continue
            except MalformedArchive:
                pass  # corrupt entry: refetch below
        to_fetch.append(key)
    if to_fetch:
        for series in source.fetch_history(run, to_fetch, scan):
            path = CacheKey(
                run.entity, run.project, run.run_id, series.metric_key, scan
            ).path(cache_dir)
            _atomic_write(path, series_to_csv(series))
            out[series.metric_key] = series
    return [out[key] for key in metric_keys if key in out]
