"""Command-line entry points: ``rlops``, ``rlops-multi-metrics``, ``rlops reproduce``.

Exit codes: 0 success, 2 argument or DSL parse error, 3 no runs found for
some (spec, env) pair, 4 source unreachable.

Environment variables:

* ``RLOPS_ARCHIVE``: archive root; when set, all data comes from the local
  archive and no network access occurs.
* ``RLOPS_API_URL`` / ``--api-url``: base URL of the tracking service.
* ``RLOPS_API_KEY``: bearer token for the tracking service.
* ``RLOPS_CACHE_DIR``: history cache directory (default ``~/.cache/rlops``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import curves, render, rlstats, scores
from .curves import AlignedCurve, AlignSpec
from .errors import (
    EmptyValue,
    FilterDslError,
    IncompleteProvenance,
    NoRunsFound,
    RlopsError,
    RunNotFound,
    SourceUnreachable,
)
from .filterdsl import (
    ExperimentSpec,
    FilterGroup,
    FilterQuery,
    parse_experiment_spec,
    parse_filter_query,
)
from .ingest import ArchiveSource, RemoteSource, cached_fetch, load_archive
from .model import MetricSeries, RunRecord, load_normalization_table
from .render import FigureSpec, LabeledSeries, Panel, PlotConfig
from .rlstats import AggregateMethod, BootstrapConfig
from .scores import NormalizationMethod

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_RUNS = 3
EXIT_UNREACHABLE = 4

DEFAULT_CACHE_DIR = "~/.cache/rlops"

EFFICIENCY_METHODS = {
    "Mean": AggregateMethod.mean(),
    "Median": AggregateMethod.median(),
    "IQM": AggregateMethod.iqm(),
    "OptimalityGap": AggregateMethod.optimality_gap(),
}


@dataclass
class RcConfig:
    """RLiable options, mirroring the --rc.* flags."""

    score_normalization_method: str = "minmax"
    score_normalization_table: str | None = None
    normalized_score_threshold: float | None = None
    aggregate_metrics_plots: bool = False
    performance_profile_plots: bool = False
    sample_efficiency_plots: bool = False
    sample_efficiency_and_walltime_efficiency_method: str = "Mean"
    interval_estimates_num_bootstrap_reps: int = 2_000
    performance_profile_num_bootstrap_reps: int = 2_000
    sample_efficiency_num_bootstrap_reps: int = 50_000
    sample_efficiency_num_points: int = 50
    sample_efficiency_figsize: tuple[float, float] | None = None
    optimality_gap_threshold: float = 1.0
    final_tail_fraction: float = 0.1
    seed: int = 42


@dataclass
class RlopsArgs:
    filter_groups: list[FilterGroup]
    check_empty_runs: bool = True
    scan_history: bool = False
    rliable: bool = False
    plot: PlotConfig = field(default_factory=PlotConfig)
    rc: RcConfig = field(default_factory=RcConfig)
    output_filename: str = "rlops_out"
    rolling_window: int = 0
    grid_size: int = 10_000
    shaded: str = "std"
    jobs: int = 4
    api_url: str | None = None
    cache_dir: str | None = None


def build_parser(prog: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog=prog,
        description="Fetch tracked runs, align curves, and render figure grids.",
    )
    p.add_argument("--filters", action="append", nargs="+", metavar="QUERY/SPEC",
                   help="a '?we=...' query followed by one or more experiment specs; "
                        "repeat for each comparison group")
    p.add_argument("--env-ids", action="append", nargs="+", metavar="ENV",
                   dest="env_ids", help="environment ids; one list shared by all "
                                        "groups, or one list per group")
    p.add_argument("--no-check-empty-runs", dest="check_empty_runs",
                   action="store_false", default=True,
                   help="warn instead of failing when a (spec, env) pair has no runs")
    p.add_argument("--scan-history", action="store_true",
                   help="fetch every logged point instead of the sampled history")
    p.add_argument("--output-filename", default="rlops_out")
    p.add_argument("--rliable", action="store_true",
                   help="additionally compute aggregate statistics and figures")
    p.add_argument("--jobs", type=int, default=4, help="concurrent history fetches")
    p.add_argument("--api-url", default=None)
    p.add_argument("--cache-dir", default=None)

    p.add_argument("--pc.ncols", dest="pc_ncols", type=int, default=2)
    p.add_argument("--pc.ncols-legend", dest="pc_ncols_legend", type=int, default=2)
    p.add_argument("--pc.xlabel", dest="pc_xlabel", default="Steps")
    p.add_argument("--pc.ylabel", dest="pc_ylabel", default="Episodic Return")
    p.add_argument("--pc.max_steps", dest="pc_max_steps", type=float, default=None)
    p.add_argument("--pc.figsize", dest="pc_figsize", type=float, nargs=2, default=None)
    p.add_argument("--pc.rolling-window", dest="pc_rolling_window", type=int, default=0,
                   help="trailing rolling-average window for plotted curves (0 = off)")
    p.add_argument("--pc.shaded", dest="pc_shaded", choices=("std", "ci"), default="std",
                   help="what the shaded area represents")
    p.add_argument("--pc.grid-size", dest="pc_grid_size", type=int, default=10_000,
                   help="points on the shared interpolation grid")

    p.add_argument("--rc.score_normalization_method", dest="rc_norm_method",
                   choices=("atari", "minmax", "none"), default="minmax")
    p.add_argument("--rc.score_normalization_table", dest="rc_norm_table", default=None,
                   help="CSV with header env_id,random_score,human_score "
                        "(required for the atari method)")
    p.add_argument("--rc.normalized_score_threshold", dest="rc_threshold",
                   type=float, default=None,
                   help="clamp normalized scores at this value before aggregation")
    p.add_argument("--rc.aggregate_metrics_plots", dest="rc_aggregate_plots",
                   action="store_true")
    p.add_argument("--rc.performance_profile_plots", dest="rc_profile_plots",
                   action="store_true")
    p.add_argument("--rc.sample_efficiency_plots", dest="rc_efficiency_plots",
                   action="store_true")
    p.add_argument("--rc.sample_efficiency_and_walltime_efficiency_method",
                   dest="rc_efficiency_method", choices=tuple(EFFICIENCY_METHODS),
                   default="Mean")
    p.add_argument("--rc.interval_estimates_num_bootstrap_reps",
                   dest="rc_interval_reps", type=int, default=2_000)
    p.add_argument("--rc.performance_profile_num_bootstrap_reps",
                   dest="rc_profile_reps", type=int, default=2_000)
    p.add_argument("--rc.sample_efficiency_num_bootstrap_reps",
                   dest="rc_efficiency_reps", type=int, default=50_000)
    p.add_argument("--rc.sample_efficiency_num_points",
                   dest="rc_efficiency_points", type=int, default=50,
                   help="grid points at which efficiency-curve intervals are evaluated")
    p.add_argument("--rc.sample_efficiency_figsize", dest="rc_efficiency_figsize",
                   type=float, nargs=2, default=None)
    p.add_argument("--rc.optimality_gap_threshold", dest="rc_gap_threshold",
                   type=float, default=1.0)
    p.add_argument("--rc.final_tail_fraction", dest="rc_tail_fraction",
                   type=float, default=0.1,
                   help="fraction of the grid averaged into the final score")
    p.add_argument("--rc.seed", dest="rc_seed", type=int, default=42)
    return p


def parse_rlops_args(argv: Sequence[str], prog: str = "rlops",
                     multi_metrics: bool = False) -> RlopsArgs:
    """Parse argv into RlopsArgs; raises FilterDslError / SystemExit(2) on bad input."""
    ns = build_parser(prog).parse_args(list(argv))
    if not ns.filters:
        raise EmptyValue("at least one --filters group is required")
    groups_raw = ns.filters
    env_lists = ns.env_ids or []
    if not env_lists:
        raise EmptyValue("at least one --env-ids list is required")
    if len(env_lists) not in (1, len(groups_raw)):
        raise EmptyValue(
            f"got {len(env_lists)} --env-ids lists for {len(groups_raw)} "
            f"--filters groups; pass one shared list or one per group"
        )
    groups = []
    for gi, tokens in enumerate(groups_raw):
        query = parse_filter_query(tokens[0])
        if len(tokens) < 2:
            raise EmptyValue(
                f"--filters group {gi + 1}: query {tokens[0]!r} has no experiment specs"
            )
        if multi_metrics and not query.multi_metric:
            raise EmptyValue(
                f"--filters group {gi + 1}: use 'metrics=' (repeatable) instead of "
                f"'metric=' with {prog}"
            )
        specs = tuple(parse_experiment_spec(tok) for tok in tokens[1:])
        env_ids = tuple(env_lists[0] if len(env_lists) == 1 else env_lists[gi])
        groups.append(FilterGroup(query=query, specs=specs, env_ids=env_ids))
    plot = PlotConfig(
        ncols=ns.pc_ncols,
        ncols_legend=ns.pc_ncols_legend,
        xlabel=ns.pc_xlabel,
        ylabel=ns.pc_ylabel,
        max_steps=ns.pc_max_steps,
        figsize=tuple(ns.pc_figsize) if ns.pc_figsize else None,
    )
    rc = RcConfig(
        score_normalization_method=ns.rc_norm_method,
        score_normalization_table=ns.rc_norm_table,
        normalized_score_threshold=ns.rc_threshold,
        aggregate_metrics_plots=ns.rc_aggregate_plots,
        performance_profile_plots=ns.rc_profile_plots,
        sample_efficiency_plots=ns.rc_efficiency_plots,
        sample_efficiency_and_walltime_efficiency_method=ns.rc_efficiency_method,
        interval_estimates_num_bootstrap_reps=ns.rc_interval_reps,
        performance_profile_num_bootstrap_reps=ns.rc_profile_reps,
        sample_efficiency_num_bootstrap_reps=ns.rc_efficiency_reps,
        sample_efficiency_num_points=ns.rc_efficiency_points,
        sample_efficiency_figsize=(tuple(ns.rc_efficiency_figsize)
                                   if ns.rc_efficiency_figsize else None),
        optimality_gap_threshold=ns.rc_gap_threshold,
        final_tail_fraction=ns.rc_tail_fraction,
        seed=ns.rc_seed,
    )
    return RlopsArgs(
        filter_groups=groups,
        check_empty_runs=ns.check_empty_runs,
        scan_history=ns.scan_history,
        rliable=ns.rliable,
        plot=plot,
        rc=rc,
        output_filename=ns.output_filename,
        rolling_window=ns.pc_rolling_window,
        grid_size=ns.pc_grid_size,
        shaded=ns.pc_shaded,
        jobs=ns.jobs,
        api_url=ns.api_url,
        cache_dir=ns.cache_dir,
    )


def make_source(args: RlopsArgs):
    archive = os.environ.get("RLOPS_ARCHIVE")
    if archive:
        return load_archive(archive)
    api_url = args.api_url or os.environ.get("RLOPS_API_URL")
    if not api_url:
        raise SourceUnreachable(
            "no data source configured: set RLOPS_ARCHIVE for a local archive "
            "or --api-url / RLOPS_API_URL for the tracking service"
        )
    return RemoteSource(api_url)


def _cache_dir(args: RlopsArgs) -> Path:
    raw = args.cache_dir or os.environ.get("RLOPS_CACHE_DIR") or DEFAULT_CACHE_DIR
    return Path(raw).expanduser()


@dataclass
class MethodData:
    """Everything fetched for one (group, spec) method."""

    label: str
    group_index: int
    spec: ExperimentSpec
    query: FilterQuery
    # per task index: list of (run, {metric_key: series})
    runs_per_task: list[list[tuple[RunRecord, dict[str, MetricSeries]]]]


def _fetch_all(args: RlopsArgs, source, metric_keys_for) -> tuple[list[MethodData], list[str]]:
    """Query and fetch every (group, spec, env) combination in parallel.

    Returns the per-method data plus the positional task labels.
    """
    n_tasks = len(args.filter_groups[0].env_ids)
    for group in args.filter_groups:
        if len(group.env_ids) != n_tasks:
            raise EmptyValue(
                "all --env-ids lists must have the same length so tasks "
                "correspond positionally across groups"
            )
    task_labels = []
    for i in range(n_tasks):
        names = []
        for group in args.filter_groups:
            if group.env_ids[i] not in names:
                names.append(group.env_ids[i])
        task_labels.append(" / ".join(names))

    cache = _cache_dir(args)
    methods: list[MethodData] = []
    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        for gi, group in enumerate(args.filter_groups):
            keys = metric_keys_for(group.query)
            for spec in group.specs:
                per_task = []
                for env_id in group.env_ids:
                    try:
                        runs = source.query_runs(group.query, spec, env_id)
                    except NoRunsFound:
                        if args.check_empty_runs:
                            raise
                        print(
                            f"warning: no runs for spec {spec.name!r} on "
                            f"{env_id!r}; continuing (--no-check-empty-runs)",
                            file=sys.stderr,
                        )
                        per_task.append([])
                        continue
                    futures = [
                        pool.submit(cached_fetch, source, run, keys,
                                    args.scan_history, cache)
                        for run in runs
                    ]
                    fetched = []
                    for run, fut in zip(runs, futures):
                        series_list = fut.result()
                        fetched.append((run, {s.metric_key: s for s in series_list}))
                    per_task.append(fetched)
                methods.append(MethodData(
                    label=spec.label, group_index=gi, spec=spec,
                    query=group.query, runs_per_task=per_task,
                ))
    return methods, task_labels


def _plot_series(args: RlopsArgs, series_list: list[MetricSeries],
                 x_axis: str = curves.X_GLOBAL_STEP) -> LabeledSeries | None:
    """Aligned mean curve with a std or normal-approx 95% CI band."""
    usable = [s for s in series_list if len(s) >= 2]
    if not usable:
        return None
    if args.rolling_window > 1:
        usable = [curves.rolling_average(s, args.rolling_window) for s in usable]
    spec = AlignSpec(grid_size=args.grid_size, max_steps=args.plot.max_steps,
                     x_axis=x_axis)
    curve = curves.align_runs(usable, spec)
    mean = curve.values.mean(axis=0)
    n = curve.values.shape[0]
    std = curve.values.std(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
    if args.shaded == "ci":
        half = 1.96 * std / np.sqrt(n)
    else:
        half = std
    return LabeledSeries(label="", x=curve.grid, y=mean,
                         band=(mean - half, mean + half))


def _curve_grid_figure(args: RlopsArgs, methods: list[MethodData],
                       task_labels: list[str], metrics: list[str]) -> FigureSpec:
    panels = []
    for metric in metrics:
        for ti, task in enumerate(task_labels):
            series = []
            for method in methods:
                wanted = metric if metric in method.query.metrics else None
                if wanted is None:
                    continue
                run_series = [
                    hist[wanted] for _, hist in method.runs_per_task[ti]
                    if wanted in hist
                ]
                plotted = _plot_series(args, run_series)
                if plotted is not None:
                    series.append(LabeledSeries(
                        label=method.label, x=plotted.x, y=plotted.y,
                        band=plotted.band,
                    ))
            title = task if len(metrics) == 1 else f"{task}: {metric}"
            panels.append(Panel(title=title, series=tuple(series)))
    return FigureSpec(panels=tuple(panels), band_kind=args.shaded)


def _normalization_method(args: RlopsArgs) -> NormalizationMethod:
    kind = args.rc.score_normalization_method
    if kind == "atari":
        if not args.rc.score_normalization_table:
            raise EmptyValue(
                "--rc.score_normalization_method atari requires "
                "--rc.score_normalization_table"
            )
        return NormalizationMethod.atari(
            load_normalization_table(args.rc.score_normalization_table)
        )
    return NormalizationMethod(kind)


def _clamp_rows(matrix, threshold):
    if threshold is None:
        return matrix
    return matrix.map_rows(lambda task, row: np.minimum(row, threshold))


def _rliable_outputs(args: RlopsArgs, methods: list[MethodData],
                     task_labels: list[str], metric: str, out_base: Path) -> None:
    rc = args.rc
    method_norm = _normalization_method(args)
    print(f"rlops: bootstrap seed {rc.seed} (rng {rlstats.RNG_ALGORITHM})",
          file=sys.stderr)

    # Env ids per method per task (atari lookups use the group's own env ids).
    env_for = {
        m.label: [args.filter_groups[m.group_index].env_ids[i]
                  for i in range(len(task_labels))]
        for m in methods
    }

    def series_for(method: MethodData, ti: int) -> list[MetricSeries]:
        return [hist[metric] for _, hist in method.runs_per_task[ti]
                if metric in hist and len(hist[metric]) >= 2]

    # Only (method, task) cells with data participate; tasks empty everywhere
    # are dropped from the statistics.
    active_tasks = [
        ti for ti in range(len(task_labels))
        if all(series_for(m, ti) for m in methods)
    ]
    if not active_tasks:
        raise NoRunsFound("no task has data for every method; cannot aggregate")
    dropped = set(range(len(task_labels))) - set(active_tasks)
    for ti in sorted(dropped):
        print(f"warning: task {task_labels[ti]!r} lacks data for some method; "
              f"excluded from statistics", file=sys.stderr)

    # Raw final scores per method.
    raw_matrices = {}
    aligned_step = {}
    for method in methods:
        task_rows = {}
        curves_per_task = []
        for ti in active_tasks:
            spec = AlignSpec(grid_size=args.grid_size, max_steps=args.plot.max_steps)
            curve = curves.align_runs(series_for(method, ti), spec)
            curves_per_task.append(curve)
            task_rows[task_labels[ti]] = scores.final_scores(
                curve, rc.final_tail_fraction
            )
        raw_matrices[method.label] = scores.build_score_matrix(
            task_rows, NormalizationMethod.none(), method_label=method.label
        )
        aligned_step[method.label] = curves_per_task

    # Normalize: atari per env, minmax against study-wide per-task extremes.
    bounds = None
    norm_matrices = {}
    if method_norm.kind == "minmax":
        bounds = scores.minmax_bounds(list(raw_matrices.values()))
    for method in methods:
        matrix = raw_matrices[method.label]
        if method_norm.kind == "atari":
            envs = env_for[method.label]
            rows = {
                task_labels[ti]: scores.normalize_atari(
                    matrix.scores[k], envs[ti], method_norm.table
                )
                for k, ti in enumerate(active_tasks)
            }
            matrix = scores.build_score_matrix(
                rows, NormalizationMethod.none(), method_label=method.label
            )
        elif method_norm.kind == "minmax":
            matrix = scores.apply_minmax(matrix, bounds)
        norm_matrices[method.label] = _clamp_rows(matrix, rc.normalized_score_threshold)

    # Summary table: the four aggregates with CIs, for every method.
    interval_cfg = BootstrapConfig(reps=rc.interval_estimates_num_bootstrap_reps,
                                   seed=rc.seed)
    aggregators = [
        AggregateMethod.mean(),
        AggregateMethod.median(),
        AggregateMethod.iqm(),
        AggregateMethod.optimality_gap(rc.optimality_gap_threshold),
    ]
    summaries = {
        label: [rlstats.stratified_bootstrap_ci(matrix, agg, interval_cfg)
                for agg in aggregators]
        for label, matrix in norm_matrices.items()
    }
    csv_path = Path(f"{out_base}_summary.csv")
    render.emit_summary_table(summaries, "csv", csv_path)
    render.emit_summary_table(summaries, "markdown", Path(f"{out_base}_summary.md"))
    meta = {
        "seed": rc.seed,
        "rng": rlstats.RNG_ALGORITHM,
        "confidence": interval_cfg.confidence,
        "interval_estimates_num_bootstrap_reps": interval_cfg.reps,
        "score_normalization_method": method_norm.kind,
        "normalized_score_threshold": rc.normalized_score_threshold,
        "final_tail_fraction": rc.final_tail_fraction,
    }
    Path(f"{out_base}_summary.meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    norm_axis_label = {"atari": "reference-normalized score",
                       "minmax": "min-max normalized score",
                       "none": "score"}[method_norm.kind]

    if rc.aggregate_metrics_plots:
        cfg = PlotConfig(ncols=4, ncols_legend=args.plot.ncols_legend,
                         xlabel=norm_axis_label, ylabel="")
        render.render_interval_estimates(summaries, cfg, f"{out_base}_aggregates")

    if rc.performance_profile_plots:
        pooled = np.concatenate([m.pooled() for m in norm_matrices.values()])
        lo, hi = float(pooled.min()), float(pooled.max())
        taus = np.linspace(lo, hi, 101) if hi > lo else np.array([lo])
        profile_cfg = BootstrapConfig(
            reps=rc.performance_profile_num_bootstrap_reps, seed=rc.seed
        )
        profiles = {
            label: rlstats.performance_profile(matrix, taus, profile_cfg)
            for label, matrix in norm_matrices.items()
        }
        cfg = PlotConfig(ncols=1, ncols_legend=args.plot.ncols_legend,
                         xlabel="", ylabel="")
        render.render_performance_profiles(
            profiles, cfg, f"{out_base}_performance_profile",
            norm_label=method_norm.kind,
        )

    if rc.sample_efficiency_plots:
        eff_cfg = BootstrapConfig(reps=rc.sample_efficiency_num_bootstrap_reps,
                                  seed=rc.seed)
        agg = EFFICIENCY_METHODS[rc.sample_efficiency_and_walltime_efficiency_method]
        for x_axis, suffix, xlabel in (
            (curves.X_GLOBAL_STEP, "sample_efficiency", args.plot.xlabel),
            (curves.X_WALL_TIME, "walltime_efficiency", "Seconds"),
        ):
            upper = None
            for method in methods:
                for ti in active_tasks:
                    for s in series_for(method, ti):
                        last = (s.relative_times()[-1] if x_axis == curves.X_WALL_TIME
                                else s.steps()[-1])
                        upper = last if upper is None else min(upper, last)
            if x_axis == curves.X_GLOBAL_STEP and args.plot.max_steps is not None:
                upper = min(upper, args.plot.max_steps)
            if upper is None or upper <= 0:
                print(f"warning: skipping {suffix}: no shared x-range",
                      file=sys.stderr)
                continue
            grid = np.linspace(0.0, upper, rc.sample_efficiency_num_points)
            panel_series = []
            for method in methods:
                per_task = []
                active_labels = [task_labels[ti] for ti in active_tasks]
                for k, ti in enumerate(active_tasks):
                    curve = curves.align_to_grid(series_for(method, ti), grid, x_axis)
                    if method_norm.kind == "minmax":
                        curve = scores.normalize_curve(
                            curve, env_for[method.label][ti], method_norm, bounds[k]
                        )
                    elif method_norm.kind == "atari":
                        curve = scores.normalize_curve(
                            curve, env_for[method.label][ti], method_norm
                        )
                    if rc.normalized_score_threshold is not None:
                        curve = AlignedCurve(
                            curve.x_axis, curve.grid,
                            np.minimum(curve.values, rc.normalized_score_threshold),
                            curve.run_ids,
                        )
                    per_task.append(curve)
                eff = rlstats.sample_efficiency_curve(per_task, active_labels,
                                                      agg, eff_cfg)
                panel_series.append(LabeledSeries(
                    label=method.label, x=eff.x, y=eff.point, band=eff.bands,
                ))
            fig_spec = FigureSpec(
                panels=(Panel(title=f"{agg.label} {norm_axis_label}",
                              series=tuple(panel_series)),),
                band_kind="ci",
            )
            cfg = PlotConfig(ncols=1, ncols_legend=args.plot.ncols_legend,
                             xlabel=xlabel, ylabel=norm_axis_label,
                             figsize=rc.sample_efficiency_figsize)
            render.render_curve_grid(fig_spec, cfg, f"{out_base}_{suffix}")


def _run_pipeline(args: RlopsArgs, multi_metrics: bool) -> int:
    source = make_source(args)

    def metric_keys_for(query: FilterQuery) -> list[str]:
        return list(query.metrics) if multi_metrics else [query.metrics[0]]

    methods, task_labels = _fetch_all(args, source, metric_keys_for)
    if multi_metrics:
        metrics: list[str] = []
        for group in args.filter_groups:
            for key in group.query.metrics:
                if key not in metrics:
                    metrics.append(key)
    else:
        metrics = [args.filter_groups[0].query.metrics[0]]

    out_base = Path(args.output_filename)
    fig_spec = _curve_grid_figure(args, methods, task_labels, metrics)
    written = render.render_curve_grid(fig_spec, args.plot, out_base)
    for path in written:
        print(f"rlops: wrote {path}", file=sys.stderr)

    if args.rliable and not multi_metrics:
        _rliable_outputs(args, methods, task_labels, metrics[0], out_base)
    return EXIT_OK


def run_rlops(argv: Sequence[str]) -> int:
    """The ``rlops`` command; returns the process exit code."""
    return _run_cli(argv, prog="rlops", multi_metrics=False)


def run_rlops_multi_metrics(argv: Sequence[str]) -> int:
    """The ``rlops-multi-metrics`` command; returns the process exit code."""
    return _run_cli(argv, prog="rlops-multi-metrics", multi_metrics=True)


def _run_cli(argv: Sequence[str], prog: str, multi_metrics: bool) -> int:
    argv = list(argv)
    if not multi_metrics and argv[:1] == ["reproduce"]:
        return _run_reproduce(argv[1:])
    try:
        args = parse_rlops_args(argv, prog=prog, multi_metrics=multi_metrics)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (FilterDslError, ValueError) as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _run_pipeline(args, multi_metrics)
    except (FilterDslError, ValueError) as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoRunsFound as exc:
        print(f"{prog}: error: {exc} (use --no-check-empty-runs to continue)",
              file=sys.stderr)
        return EXIT_NO_RUNS
    except SourceUnreachable as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except RlopsError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return 1


# --- reproduction scripts ---------------------------------------------------

PROVENANCE_FIELDS = ("command", "git_commit", "dependency_snapshot")


def generate_reproduction_script(source, run_ref: str) -> str:
    """POSIX-shell text that recreates a run: checkout, env, files, command.

    ``run_ref`` is ``entity/project/run_id``.  Nothing is executed here; the
    script is returned as text.
    """
    parts = run_ref.split("/", 2)
    if len(parts) != 3 or not all(parts):
        raise RunNotFound(f"run reference must be entity/project/run_id, got {run_ref!r}")
    entity, project, run_id = parts
    run = source.get_run(entity, project, run_id)
    missing = [name for name in PROVENANCE_FIELDS if not getattr(run, name)]
    if missing:
        raise IncompleteProvenance(missing)
    snapshot = run.dependency_snapshot
    if not snapshot.endswith("\n"):
        snapshot += "\n"
    return (
        "#!/bin/sh\n"
        f"# Reproduction of {entity}/{project}/{run_id}\n"
        "set -eu\n"
        "\n"
        "# 1. Source checkout pinned to the recorded commit.\n"
        f'git clone "${{REPO_URL:?set REPO_URL to the project repository}}" '
        f'"repro-{run_id}"\n'
        f'cd "repro-{run_id}"\n'
        f"git checkout {run.git_commit}\n"
        "\n"
        "# 2. Environment with the frozen dependency versions.\n"
        "cat > requirements.lock <<'RLOPS_LOCK'\n"
        f"{snapshot}"
        "RLOPS_LOCK\n"
        "python -m pip install -r requirements.lock\n"
        "\n"
        "# 3. Files pinned to this run.\n"
        f"rlops download {entity}/{project}/{run_id}\n"
        "\n"
        "# 4. Exact original command (seed included).\n"
        f"{run.command}\n"
    )


def _run_reproduce(argv: Sequence[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="rlops reproduce",
        description="Print a shell script that exactly reproduces a tracked run.",
    )
    parser.add_argument("run_ref", metavar="entity/project/run_id")
    parser.add_argument("--api-url", default=None)
    try:
        ns = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        source = make_source(RlopsArgs(filter_groups=[], api_url=ns.api_url))
        print(generate_reproduction_script(source, ns.run_ref), end="")
    except IncompleteProvenance as exc:
        print(f"rlops reproduce: error: {exc}", file=sys.stderr)
        return 1
    except SourceUnreachable as exc:
        print(f"rlops reproduce: error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except RlopsError as exc:
        print(f"rlops reproduce: error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


def main() -> None:
    sys.exit(run_rlops(sys.argv[1:]))


def main_multi_metrics() -> None:
    sys.exit(run_rlops_multi_metrics(sys.argv[1:]))
