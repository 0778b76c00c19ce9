"""Deterministic synthetic archive for demos, docs, and end-to-end tests."""

from __future__ import annotations

import numpy as np

from .ingest import save_archive
from .model import MetricPoint, MetricSeries, RunRecord

DEMO_ENTITY = "demo"
DEMO_PROJECT = "bench"
DEMO_ENVS = ("Alpha-v1", "Beta-v1", "Gamma-v1")
DEMO_ALGOS = ("fastppo", "steadyq")
DEMO_METRIC = "charts/episodic_return"
DEMO_SEEDS = (1, 2, 3)
DEMO_POINTS = 1_000


def _curve(env_idx: int, algo_idx: int, seed: int, steps: np.ndarray) -> np.ndarray:
    # Saturating learning curve with seeded noise; fully determined by its args.
    rng = np.random.default_rng(10_000 * env_idx + 100 * algo_idx + seed)
    ceiling = 80.0 + 40.0 * env_idx + 15.0 * algo_idx
    rate = 2.0e-5 * (1.0 + 0.3 * algo_idx)
    base = ceiling * (1.0 - np.exp(-rate * steps))
    return base + rng.normal(0.0, 2.0, size=steps.size)


def build_demo_archive(root) -> None:
    """Write a 2-algorithm x 3-env x 3-seed archive with 1,000 points per run."""
    steps = np.linspace(0, 200_000, DEMO_POINTS)
    runs, histories = [], []
    created = 1_700_000_000.0
    for env_idx, env_id in enumerate(DEMO_ENVS):
        for algo_idx, algo in enumerate(DEMO_ALGOS):
            for seed in DEMO_SEEDS:
                run_id = f"{algo}-{env_id}-s{seed}"
                created += 60.0
                runs.append(RunRecord(
                    run_id=run_id,
                    entity=DEMO_ENTITY,
                    project=DEMO_PROJECT,
                    name=run_id,
                    config={"env": env_id, "exp_name": algo, "seed": seed},
                    created_at=created,
                    command=f"train --env {env_id} --algo {algo} --seed {seed}",
                    git_commit=f"c0ffee{env_idx}{algo_idx}{seed}",
                    dependency_snapshot=f"numpy==1.26.0\n{algo}==0.1.{seed}\n",
                    seed=seed,
                ))
                values = _curve(env_idx, algo_idx, seed, steps)
                # Per-run throughput differs so wall-time alignment is exercised.
                rate = 500.0 * (1.0 + 0.2 * algo_idx + 0.05 * seed)
                histories.append(MetricSeries(
                    run_id=run_id,
                    metric_key=DEMO_METRIC,
                    points=tuple(
                        MetricPoint(float(s), float(s / rate), float(v))
                        for s, v in zip(steps, values)
                    ),
                ))
    save_archive(root, runs, histories)
