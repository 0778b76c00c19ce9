import numpy as np
import pytest

from rlops.filterdsl import ExperimentSpec, FilterQuery
from rlops.ingest import save_archive
from rlops.model import MetricPoint, MetricSeries, RunRecord


def make_series(run_id, metric_key, steps, values, times=None):
    steps = np.asarray(steps, dtype=float)
    values = np.asarray(values, dtype=float)
    if times is None:
        times = steps / 100.0
    return MetricSeries(
        run_id=run_id,
        metric_key=metric_key,
        points=tuple(
            MetricPoint(float(s), float(t), float(v))
            for s, t, v in zip(steps, times, values)
        ),
    )


def make_run(run_id, env="CartPole-v1", exp_name="ppo", created_at=0.0, **kwargs):
    config = {"env": env, "exp_name": exp_name}
    config.update(kwargs.pop("config", {}))
    return RunRecord(
        run_id=run_id,
        entity="acme",
        project="bench",
        name=run_id,
        config=config,
        created_at=created_at,
        **kwargs,
    )


@pytest.fixture
def basic_query():
    return FilterQuery(entity="acme", project="bench",
                       metrics=("charts/episodic_return",))


@pytest.fixture
def archive_root(tmp_path):
    """Archive with 3 matching ppo runs, 2 non-matching, and small histories."""
    runs = [
        make_run("r3", created_at=30.0, seed=3),
        make_run("r1", created_at=10.0, seed=1, config={"seed": "1"}),
        make_run("r2", created_at=20.0, seed=2),
        make_run("other-env", env="Acrobot-v1", created_at=5.0),
        make_run("other-algo", exp_name="dqn", created_at=6.0),
    ]
    histories = [
        make_series(r.run_id, "charts/episodic_return",
                    [0, 10, 20, 30], [1.0, 2.0, 3.0, 4.0])
        for r in runs
    ]
    root = tmp_path / "archive"
    save_archive(root, runs, histories)
    return root


@pytest.fixture
def ppo_spec():
    return ExperimentSpec(name="ppo")
